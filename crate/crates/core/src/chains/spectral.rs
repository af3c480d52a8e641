use nalgebra::{DMatrix, SymmetricEigen};

use super::finite::{check_centered, FiniteReversibleChain};
use crate::{Error, Result};

/// Eigen-decomposition of a reversible transition operator in `L^2(pi)`.
///
/// For a centered `g` with coefficients `c_i = <g, phi_i>_pi`, the spectral
/// measure of `g` is the discrete measure `sum_i c_i^2 delta_{lambda_i}` and
/// `cov(g(X_0), g(X_k)) = sum_i lambda_i^k c_i^2`.
#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    /// Sorted in decreasing order.
    pub eigenvalues: Vec<f64>,
    /// Column `i` holds `phi_i` evaluated at the states.
    pub basis: DMatrix<f64>,
    stationary: Vec<f64>,
    /// Largest excursion of an eigenvalue outside `[-1, 1]` before clipping.
    pub clipped_by: f64,
}

impl SpectralDecomposition {
    /// `c_i = <g, phi_i>_pi` aligned with `eigenvalues`. For the top
    /// eigenvector (the constant) the coefficient is the mean of `g`.
    pub fn coefficients(&self, g: &[f64]) -> Result<Vec<f64>> {
        let s = self.stationary.len();
        if g.len() != s {
            return Err(Error::Domain(format!(
                "function has {} entries, chain has {s} states",
                g.len()
            )));
        }
        Ok((0..s)
            .map(|i| (0..s).map(|a| self.stationary[a] * g[a] * self.basis[(a, i)]).sum())
            .collect())
    }

    /// `sum_i lambda_i^lag c_i^2`.
    pub fn lag_covariance(&self, coefficients: &[f64], lag: usize) -> f64 {
        let lag = i32::try_from(lag).unwrap_or(i32::MAX);
        self.eigenvalues
            .iter()
            .zip(coefficients)
            .map(|(l, c)| l.powi(lag) * c * c)
            .sum()
    }

    /// `D^{-1/2} V Lambda V^T D^{1/2}`.
    pub fn reconstruct(&self) -> DMatrix<f64> {
        let s = self.stationary.len();
        DMatrix::from_fn(s, s, |a, b| {
            (0..s)
                .map(|i| self.basis[(a, i)] * self.eigenvalues[i] * self.basis[(b, i)] * self.stationary[b])
                .sum()
        })
    }
}

/// Symmetrize `D^{1/2} P D^{-1/2}`, diagonalize it and map the eigenvectors
/// back to a `pi`-orthonormal basis.
pub fn spectral_decompose(chain: &FiniteReversibleChain) -> Result<SpectralDecomposition> {
    let s = chain.n_states();
    let pi = chain.stationary();
    let p = chain.transition();
    let sq: Vec<f64> = pi.iter().map(|x| x.sqrt()).collect();
    let a = DMatrix::from_fn(s, s, |i, j| {
        let x = sq[i] * p[(i, j)] / sq[j];
        let y = sq[j] * p[(j, i)] / sq[i];
        0.5 * (x + y)
    });
    if a.iter().any(|x| !x.is_finite()) {
        return Err(Error::Eigen("symmetrized operator has non-finite entries".into()));
    }
    let eig = SymmetricEigen::try_new(a, f64::EPSILON, 10_000)
        .ok_or_else(|| Error::Eigen("symmetric eigensolver did not converge".into()))?;

    let mut order: Vec<usize> = (0..s).collect();
    order.sort_by(|&x, &y| eig.eigenvalues[y].total_cmp(&eig.eigenvalues[x]));
    let mut clipped_by = 0.0f64;
    let eigenvalues: Vec<f64> = order
        .iter()
        .map(|&i| {
            let l = eig.eigenvalues[i];
            clipped_by = clipped_by.max(l.abs() - 1.0);
            l.clamp(-1.0, 1.0)
        })
        .collect();
    let basis = DMatrix::from_fn(s, s, |a, i| eig.eigenvectors[(a, order[i])] / sq[a]);
    Ok(SpectralDecomposition {
        eigenvalues,
        basis,
        stationary: pi.to_vec(),
        clipped_by: clipped_by.max(0.0),
    })
}

/// `cov(g(X_0), g(X_lag)) = sum_i lambda_i^lag c_i^2` for centered `g`.
pub fn exact_lag_covariance(chain: &FiniteReversibleChain, g: &[f64], lag: usize) -> Result<f64> {
    check_centered(chain, g)?;
    let dec = spectral_decompose(chain)?;
    let c = dec.coefficients(g)?;
    Ok(dec.lag_covariance(&c, lag))
}
