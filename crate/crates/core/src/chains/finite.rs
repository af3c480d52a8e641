use nalgebra::DMatrix;
use rand::Rng;

use crate::numerics::RngStream;
use crate::{Error, Result};

const STOCHASTIC_TOL: f64 = 1e-12;
const REVERSIBILITY_TOL: f64 = 1e-9;
const NULLITY_TOL: f64 = 1e-10;

/// A finite-state stationary reversible chain embedded in the real line.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteReversibleChain {
    values: Vec<f64>,
    transition: DMatrix<f64>,
    stationary: Vec<f64>,
}

impl FiniteReversibleChain {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn transition(&self) -> &DMatrix<f64> {
        &self.transition
    }

    pub fn stationary(&self) -> &[f64] {
        &self.stationary
    }

    pub fn n_states(&self) -> usize {
        self.values.len()
    }

    /// Build a chain whose stationary law is supplied rather than solved for.
    /// Needed for reducible chains (e.g. the identity transition), where the
    /// invariant law is not unique.
    pub fn with_stationary(values: Vec<f64>, transition: Vec<Vec<f64>>, stationary: Vec<f64>) -> Result<Self> {
        let p = validate_shape(&values, &transition)?;
        let s = values.len();
        if stationary.len() != s {
            return Err(Error::InvalidChain("stationary vector has the wrong length".into()));
        }
        if stationary.iter().any(|&x| !(x > 0.0) || !x.is_finite()) {
            return Err(Error::InvalidChain("stationary probabilities must be positive".into()));
        }
        if (stationary.iter().sum::<f64>() - 1.0).abs() > STOCHASTIC_TOL {
            return Err(Error::InvalidChain("stationary probabilities must sum to 1".into()));
        }
        for j in 0..s {
            let flow: f64 = (0..s).map(|i| stationary[i] * p[(i, j)]).sum();
            if (flow - stationary[j]).abs() > STOCHASTIC_TOL {
                return Err(Error::InvalidChain(format!(
                    "supplied law is not invariant at state {j} (piP - pi = {:e})",
                    flow - stationary[j]
                )));
            }
        }
        check_detailed_balance(&p, &stationary)?;
        Ok(Self {
            values,
            transition: p,
            stationary,
        })
    }

    /// Joint law of `(X_0, X_lag)`: `diag(pi) P^lag`.
    pub fn joint_law(&self, lag: usize) -> DMatrix<f64> {
        let pk = self.transition_power(lag);
        let mut j = pk;
        for i in 0..self.n_states() {
            for c in 0..self.n_states() {
                j[(i, c)] *= self.stationary[i];
            }
        }
        j
    }

    pub fn transition_power(&self, lag: usize) -> DMatrix<f64> {
        let s = self.n_states();
        let mut acc = DMatrix::identity(s, s);
        let mut base = self.transition.clone();
        let mut e = lag;
        while e > 0 {
            if e & 1 == 1 {
                acc = &acc * &base;
            }
            base = &base * &base;
            e >>= 1;
        }
        acc
    }

    pub fn mean(&self, g: &[f64]) -> f64 {
        self.stationary.iter().zip(g).map(|(p, x)| p * x).sum()
    }

    /// `<f, g>_pi`.
    pub fn inner(&self, f: &[f64], g: &[f64]) -> f64 {
        self.stationary
            .iter()
            .zip(f.iter().zip(g))
            .map(|(p, (a, b))| p * a * b)
            .sum()
    }

    /// Largest detailed-balance violation `max |pi_i P_ij - pi_j P_ji|`.
    pub fn detailed_balance_violation(&self) -> f64 {
        max_violation(&self.transition, &self.stationary)
    }

    /// Map a function of the state value onto the state vector.
    pub fn tabulate<F: Fn(f64) -> f64>(&self, g: F) -> Vec<f64> {
        self.values.iter().map(|&x| g(x)).collect()
    }
}

fn validate_shape(values: &[f64], transition: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let s = values.len();
    if s == 0 {
        return Err(Error::InvalidChain("chain needs at least one state".into()));
    }
    if values.iter().any(|v| !v.is_finite()) || values.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidChain(
            "state values must be finite and strictly increasing".into(),
        ));
    }
    if transition.len() != s || transition.iter().any(|r| r.len() != s) {
        return Err(Error::InvalidChain(format!("transition must be {s}x{s}")));
    }
    for (i, row) in transition.iter().enumerate() {
        if row.iter().any(|&p| !(p >= 0.0) || !p.is_finite()) {
            return Err(Error::InvalidChain(format!(
                "row {i} has a negative or non-finite entry"
            )));
        }
        let sum: f64 = row.iter().sum();
        if (sum - 1.0).abs() > STOCHASTIC_TOL {
            return Err(Error::InvalidChain(format!("row {i} sums to {sum}, not 1")));
        }
    }
    Ok(DMatrix::from_fn(s, s, |i, j| transition[i][j]))
}

fn max_violation(p: &DMatrix<f64>, pi: &[f64]) -> f64 {
    let s = pi.len();
    let mut worst = 0.0f64;
    for i in 0..s {
        for j in (i + 1)..s {
            worst = worst.max((pi[i] * p[(i, j)] - pi[j] * p[(j, i)]).abs());
        }
    }
    worst
}

fn check_detailed_balance(p: &DMatrix<f64>, pi: &[f64]) -> Result<()> {
    let v = max_violation(p, pi);
    if v > REVERSIBILITY_TOL {
        Err(Error::NotReversible { max_violation: v })
    } else {
        Ok(())
    }
}

/// Solve `pi P = pi` from the null space of `P^T - I`.
fn stationary_law(p: &DMatrix<f64>) -> Result<Vec<f64>> {
    let s = p.nrows();
    if s == 1 {
        return Ok(vec![1.0]);
    }
    let a = p.transpose() - DMatrix::identity(s, s);
    let svd = a.svd(false, true);
    let v_t = svd
        .v_t
        .ok_or_else(|| Error::Eigen("SVD did not return right singular vectors".into()))?;
    let sv = &svd.singular_values;
    let scale = sv.iter().fold(1.0f64, |m, x| m.max(*x));
    let null: Vec<usize> = (0..s).filter(|&i| sv[i] <= NULLITY_TOL * scale).collect();
    if null.len() > 1 {
        return Err(Error::Reducible);
    }
    let idx = (0..s).min_by(|&a, &b| sv[a].total_cmp(&sv[b])).expect("nonempty");
    let mut pi: Vec<f64> = v_t.row(idx).iter().copied().collect();
    let total: f64 = pi.iter().sum();
    if total == 0.0 {
        return Err(Error::Reducible);
    }
    for x in &mut pi {
        *x /= total;
    }
    // a few power steps remove the O(eps * cond) residue of the solver
    for _ in 0..4 {
        let next: Vec<f64> = (0..s).map(|j| (0..s).map(|i| pi[i] * p[(i, j)]).sum()).collect();
        let t: f64 = next.iter().sum();
        pi = next.into_iter().map(|x| x / t).collect();
    }
    if let Some(i) = pi.iter().position(|&x| !(x > 1e-14)) {
        return Err(Error::InvalidChain(format!(
            "state {i} carries no stationary mass (transient state)"
        )));
    }
    Ok(pi)
}

/// Validate a transition matrix and compute its stationary law.
///
/// Fails with [`Error::NotReversible`] if detailed balance is violated by
/// more than `1e-9`, and with [`Error::Reducible`] if the invariant law is
/// not unique.
pub fn build_finite_chain(values: Vec<f64>, transition: Vec<Vec<f64>>) -> Result<FiniteReversibleChain> {
    let p = validate_shape(&values, &transition)?;
    let pi = stationary_law(&p)?;
    check_detailed_balance(&p, &pi)?;
    Ok(FiniteReversibleChain {
        values,
        transition: p,
        stationary: pi,
    })
}

/// Draw a reversible chain from symmetric positive weights `W`:
/// `P_ij = W_ij / sum_j W_ij`, `pi_i ∝ sum_j W_ij`. State values are sorted
/// uniforms on `[-3, 3]`.
pub fn random_reversible_chain(n_states: usize, stream: RngStream) -> Result<FiniteReversibleChain> {
    if !(2..=50).contains(&n_states) {
        return Err(Error::Domain(format!("n_states must be in 2..=50, got {n_states}")));
    }
    let mut rng = stream.rng();
    let s = n_states;
    let mut w = vec![vec![0.0; s]; s];
    for i in 0..s {
        for j in i..s {
            // bounded away from zero to keep the chain irreducible
            let x = 0.05 + rng.random::<f64>();
            w[i][j] = x;
            w[j][i] = x;
        }
    }
    let row_sums: Vec<f64> = w.iter().map(|r| r.iter().sum()).collect();
    let total: f64 = row_sums.iter().sum();
    let transition: Vec<Vec<f64>> = w
        .iter()
        .zip(&row_sums)
        .map(|(r, t)| r.iter().map(|x| x / t).collect())
        .collect();
    let stationary: Vec<f64> = row_sums.iter().map(|t| t / total).collect();

    let mut values: Vec<f64> = (0..s).map(|_| rng.random_range(-3.0..3.0)).collect();
    values.sort_by(f64::total_cmp);
    for i in 1..s {
        if values[i] <= values[i - 1] {
            values[i] = values[i - 1] + 1e-6;
        }
    }

    // rounding can leave rows a few ulps off 1 and pi slightly non-invariant;
    // pi is used as constructed, so validate in the loose sense only
    let p = DMatrix::from_fn(s, s, |i, j| transition[i][j]);
    check_detailed_balance(&p, &stationary)?;
    Ok(FiniteReversibleChain {
        values,
        transition: p,
        stationary,
    })
}

/// `P^steps g` as a state-indexed vector (`steps = 0` returns `g`).
pub fn conditional_expectation(chain: &FiniteReversibleChain, g: &[f64], steps: usize) -> Result<Vec<f64>> {
    let s = chain.n_states();
    if g.len() != s {
        return Err(Error::Domain(format!(
            "function has {} entries, chain has {s} states",
            g.len()
        )));
    }
    let p = chain.transition();
    let mut cur = g.to_vec();
    for _ in 0..steps {
        cur = (0..s).map(|i| (0..s).map(|j| p[(i, j)] * cur[j]).sum()).collect();
    }
    Ok(cur)
}

/// `<g, P^lag g>_pi` computed with an explicit matrix power.
pub fn direct_lag_covariance(chain: &FiniteReversibleChain, g: &[f64], lag: usize) -> Result<f64> {
    check_centered(chain, g)?;
    let pk = chain.transition_power(lag);
    let s = chain.n_states();
    let pg: Vec<f64> = (0..s).map(|i| (0..s).map(|j| pk[(i, j)] * g[j]).sum()).collect();
    Ok(chain.inner(g, &pg))
}

pub(crate) fn check_centered(chain: &FiniteReversibleChain, g: &[f64]) -> Result<()> {
    if g.len() != chain.n_states() {
        return Err(Error::Domain(format!(
            "function has {} entries, chain has {} states",
            g.len(),
            chain.n_states()
        )));
    }
    let mean = chain.mean(g);
    let scale = chain.inner(g, g).sqrt().max(1.0);
    if mean.abs() > 1e-10 * scale {
        return Err(Error::NotCentered { mean });
    }
    Ok(())
}

/// Subtract the stationary mean.
pub fn center(chain: &FiniteReversibleChain, g: &[f64]) -> Vec<f64> {
    let m = chain.mean(g);
    g.iter().map(|x| x - m).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symmetric_two_state() {
        let c = build_finite_chain(vec![-1.0, 1.0], vec![vec![0.7, 0.3], vec![0.3, 0.7]]).unwrap();
        assert!((c.stationary()[0] - 0.5).abs() < 1e-14);
        assert!((c.stationary()[1] - 0.5).abs() < 1e-14);
    }

    #[test]
    fn asymmetric_two_state_law() {
        let c = build_finite_chain(vec![0.0, 1.0], vec![vec![0.8, 0.2], vec![0.3, 0.7]]).unwrap();
        assert!((c.stationary()[0] - 0.6).abs() < 1e-14);
        assert!((c.stationary()[1] - 0.4).abs() < 1e-14);
    }

    #[test]
    fn cyclic_chain_is_not_reversible() {
        let p = vec![vec![0.1, 0.9, 0.0], vec![0.0, 0.1, 0.9], vec![0.9, 0.0, 0.1]];
        match build_finite_chain(vec![0.0, 1.0, 2.0], p) {
            Err(Error::NotReversible { max_violation }) => assert!((max_violation - 0.3).abs() < 1e-9),
            other => panic!("expected NotReversible, got {other:?}"),
        }
    }

    #[test]
    fn reducible_and_malformed_chains() {
        let id = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        assert!(matches!(
            build_finite_chain(vec![0.0, 1.0], id.clone()),
            Err(Error::Reducible)
        ));
        assert!(FiniteReversibleChain::with_stationary(vec![0.0, 1.0], id, vec![0.5, 0.5]).is_ok());
        assert!(build_finite_chain(vec![1.0, 0.0], vec![vec![0.5, 0.5], vec![0.5, 0.5]]).is_err());
        assert!(build_finite_chain(vec![0.0, 1.0], vec![vec![0.6, 0.5], vec![0.5, 0.5]]).is_err());
        let transient = vec![vec![0.5, 0.5], vec![0.0, 1.0]];
        assert!(build_finite_chain(vec![0.0, 1.0], transient).is_err());
    }

    #[test]
    fn conditional_expectation_two_state() {
        let c = build_finite_chain(vec![-1.0, 1.0], vec![vec![0.7, 0.3], vec![0.3, 0.7]]).unwrap();
        let e = conditional_expectation(&c, c.values(), 1).unwrap();
        assert!((e[0] + 0.4).abs() < 1e-15 && (e[1] - 0.4).abs() < 1e-15);
        let k = conditional_expectation(&c, &[2.5, 2.5], 7).unwrap();
        assert!(k.iter().all(|x| (x - 2.5).abs() < 1e-14));
    }

    #[test]
    fn direct_covariance_two_state() {
        let c = build_finite_chain(vec![-1.0, 1.0], vec![vec![0.7, 0.3], vec![0.3, 0.7]]).unwrap();
        let v = direct_lag_covariance(&c, c.values(), 2).unwrap();
        assert!((v - 0.16).abs() < 1e-14);
        assert!(matches!(
            direct_lag_covariance(&c, &[0.0, 1.0], 1),
            Err(Error::NotCentered { .. })
        ));
    }

    #[test]
    fn random_chains_validate() {
        for seed in 0..50 {
            let c = random_reversible_chain(2 + (seed as usize % 11), RngStream::new(seed, 0)).unwrap();
            let rows: Vec<Vec<f64>> = (0..c.n_states())
                .map(|i| c.transition().row(i).iter().copied().collect())
                .collect();
            let rebuilt = build_finite_chain(c.values().to_vec(), rows).unwrap();
            for (a, b) in rebuilt.stationary().iter().zip(c.stationary()) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }
}
