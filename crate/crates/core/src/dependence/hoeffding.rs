use crate::chains::{Ar1Chain, Chain, FiniteReversibleChain};
use crate::numerics::{bivariate_normal_pdf, integrate, normal_pdf, quadrature_2d, QuadratureConfig, Rect};
use crate::{Error, Result};

use super::coefficients::{finite_h_cells, h_k_function, ETA_TRUNCATION};

/// A function together with its derivative.
#[derive(Clone, Copy)]
pub struct Smooth<'a> {
    pub f: &'a dyn Fn(f64) -> f64,
    pub df: &'a dyn Fn(f64) -> f64,
}

impl<'a> Smooth<'a> {
    pub fn new(f: &'a dyn Fn(f64) -> f64, df: &'a dyn Fn(f64) -> f64) -> Self {
        Self { f, df }
    }
}

/// Both sides of `cov(f(X_0), g(X_lag)) = int int f'(u) g'(v) H_lag(u, v) du dv`.
///
/// `lhs` is the covariance from the joint law (exact cell sum for finite
/// chains, plane quadrature against the Gaussian density for the AR(1));
/// `rhs` integrates `f' g' H` and never evaluates `f` or `g` themselves.
pub fn hoeffding_covariance_identity(f: Smooth<'_>, g: Smooth<'_>, chain: &Chain, lag: usize) -> Result<(f64, f64)> {
    h_k_function(chain, lag)?;
    match chain {
        Chain::Finite(c) => finite_sides(f, g, c, lag),
        Chain::Ar1(c) => gaussian_sides(f, g, c, lag),
        Chain::Metropolis(_) => unreachable!("rejected by h_k_function"),
    }
}

fn finite_sides(f: Smooth<'_>, g: Smooth<'_>, chain: &FiniteReversibleChain, lag: usize) -> Result<(f64, f64)> {
    let x = chain.values();
    let s = chain.n_states();
    let joint = chain.joint_law(lag);
    let fx: Vec<f64> = x.iter().map(|&v| (f.f)(v)).collect();
    let gx: Vec<f64> = x.iter().map(|&v| (g.f)(v)).collect();
    let mut e_fg = 0.0;
    for i in 0..s {
        for j in 0..s {
            e_fg += joint[(i, j)] * fx[i] * gx[j];
        }
    }
    let lhs = e_fg - chain.mean(&fx) * chain.mean(&gx);

    let cfg = QuadratureConfig::with_tol(1e-14);
    let cell_integral = |d: &dyn Fn(f64) -> f64, a: usize| integrate(d, x[a], x[a + 1], &cfg).map(|q| q.value);
    let df: Vec<f64> = (0..s - 1).map(|a| cell_integral(f.df, a)).collect::<Result<_>>()?;
    let dg: Vec<f64> = (0..s - 1).map(|b| cell_integral(g.df, b)).collect::<Result<_>>()?;
    let cells = finite_h_cells(chain, lag);
    let mut rhs = 0.0;
    for a in 0..s - 1 {
        for b in 0..s - 1 {
            rhs += cells[(a, b)] * df[a] * dg[b];
        }
    }
    Ok((lhs, rhs))
}

fn gaussian_sides(f: Smooth<'_>, g: Smooth<'_>, chain: &Ar1Chain, lag: usize) -> Result<(f64, f64)> {
    let r = chain.lag_correlation(lag);
    let l = ETA_TRUNCATION;
    let square = Rect::square(-l, l);
    let cfg = QuadratureConfig::with_tol(1e-12);
    let ef = integrate(|u| (f.f)(u) * normal_pdf(u), -l, l, &cfg)?.value;
    let eg = integrate(|v| (g.f)(v) * normal_pdf(v), -l, l, &cfg)?.value;
    let lhs = if r == 0.0 {
        0.0
    } else {
        quadrature_2d(
            |u, v| ((f.f)(u) - ef) * ((g.f)(v) - eg) * bivariate_normal_pdf(u, v, r),
            square,
            1e-10,
        )?
        .value
    };
    let h = h_k_function(&Chain::Ar1(*chain), lag)?;
    let rhs = quadrature_2d(|u, v| (f.df)(u) * (g.df)(v) * h.eval(u, v), square, 1e-10)?;
    if !rhs.value.is_finite() {
        return Err(Error::Domain("non-finite Hoeffding integrand".into()));
    }
    Ok((lhs, rhs.value))
}
