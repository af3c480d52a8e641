use nalgebra::DMatrix;

use crate::chains::{Ar1Chain, Chain, FiniteReversibleChain};
use crate::numerics::{bivariate_normal_sf, normal_sf, quadrature_2d, QuadratureResult, Rect};
use crate::{Error, Result};

/// Half-width of the square on which Gaussian `|H_k|` is integrated.
pub const ETA_TRUNCATION: f64 = 8.0;
const ETA_TOL: f64 = 1e-9;

/// `H_k(u, v) = P(X_0 > u, X_k > v) - P(X_0 > u) P(X_k > v)`.
#[derive(Debug, Clone)]
pub enum HFunction {
    /// Piecewise constant on the cells `[x_a, x_{a+1}) x [x_b, x_{b+1})`.
    Finite { values: Vec<f64>, cells: DMatrix<f64> },
    /// Bivariate standard normal with correlation `r`.
    Gaussian { r: f64 },
}

impl HFunction {
    pub fn eval(&self, u: f64, v: f64) -> f64 {
        match self {
            HFunction::Finite { values, cells } => match (cell_index(values, u), cell_index(values, v)) {
                (Some(a), Some(b)) => cells[(a, b)],
                _ => 0.0,
            },
            HFunction::Gaussian { r } => gaussian_h(*r, u, v),
        }
    }
}

fn cell_index(values: &[f64], u: f64) -> Option<usize> {
    let s = values.len();
    if s < 2 || !(u >= values[0]) || u >= values[s - 1] {
        return None;
    }
    Some(values.partition_point(|&x| x <= u) - 1)
}

fn gaussian_h(r: f64, u: f64, v: f64) -> f64 {
    if r == 0.0 {
        return 0.0;
    }
    let joint = bivariate_normal_sf(u, v, r).expect("|r| < 1 for a valid AR(1)");
    joint - normal_sf(u) * normal_sf(v)
}

/// Cell values of `H_lag` for a finite chain: entry `(a, b)` is `H` on
/// `[x_a, x_{a+1}) x [x_b, x_{b+1})`, built from the joint law `diag(pi) P^lag`.
pub fn finite_h_cells(chain: &FiniteReversibleChain, lag: usize) -> DMatrix<f64> {
    let s = chain.n_states();
    if s < 2 {
        return DMatrix::zeros(0, 0);
    }
    let joint = chain.joint_law(lag);
    let pi = chain.stationary();
    // tail[a] = P(X > x_a) = sum_{i > a} pi_i
    let mut tail = vec![0.0; s];
    for a in (0..s - 1).rev() {
        tail[a] = tail[a + 1] + pi[a + 1];
    }
    // joint upper-right sums: jt[a][b] = sum_{i > a, j > b} J_ij
    let mut jt = DMatrix::<f64>::zeros(s + 1, s + 1);
    for i in (0..s).rev() {
        for j in (0..s).rev() {
            jt[(i, j)] = joint[(i, j)] + jt[(i + 1, j)] + jt[(i, j + 1)] - jt[(i + 1, j + 1)];
        }
    }
    DMatrix::from_fn(s - 1, s - 1, |a, b| jt[(a + 1, b + 1)] - tail[a] * tail[b])
}

fn lag_ok(lag: usize) -> Result<()> {
    if lag == 0 {
        Err(Error::Domain("lag must be at least 1".into()))
    } else {
        Ok(())
    }
}

fn unsupported(chain: &Chain) -> Error {
    Error::Domain(format!(
        "exact dependence coefficients need a finite or AR(1) chain, got {}",
        chain.describe()
    ))
}

pub fn h_k_function(chain: &Chain, lag: usize) -> Result<HFunction> {
    lag_ok(lag)?;
    match chain {
        Chain::Finite(c) => Ok(HFunction::Finite {
            values: c.values().to_vec(),
            cells: finite_h_cells(c, lag),
        }),
        Chain::Ar1(c) => Ok(HFunction::Gaussian {
            r: c.lag_correlation(lag),
        }),
        Chain::Metropolis(_) => Err(unsupported(chain)),
    }
}

/// `eta_k = int int |H_k|` with an error estimate. For the AR(1) the
/// integral is taken over `[-8, 8]^2`; outside the square
/// `|H(u, v)| <= min(Phi(-|u|), Phi(-|v|))`, which integrates to at most
/// `8 Phi(-8)`, and that bound is added to the error estimate.
pub fn eta_with_error(chain: &Chain, lag: usize) -> Result<QuadratureResult> {
    lag_ok(lag)?;
    match chain {
        Chain::Finite(c) => {
            let cells = finite_h_cells(c, lag);
            let x = c.values();
            let mut total = 0.0;
            for a in 0..cells.nrows() {
                for b in 0..cells.ncols() {
                    total += cells[(a, b)].abs() * (x[a + 1] - x[a]) * (x[b + 1] - x[b]);
                }
            }
            Ok(QuadratureResult {
                value: total,
                abs_error_estimate: 0.0,
                evaluations: cells.len(),
            })
        }
        Chain::Ar1(c) => gaussian_eta(c, lag),
        Chain::Metropolis(_) => Err(unsupported(chain)),
    }
}

fn gaussian_eta(chain: &Ar1Chain, lag: usize) -> Result<QuadratureResult> {
    let r = chain.lag_correlation(lag);
    if r == 0.0 {
        return Ok(QuadratureResult {
            value: 0.0,
            abs_error_estimate: 0.0,
            evaluations: 0,
        });
    }
    let mut q = quadrature_2d(
        |u, v| gaussian_h(r, u, v).abs(),
        Rect::square(-ETA_TRUNCATION, ETA_TRUNCATION),
        ETA_TOL,
    )?;
    q.abs_error_estimate += 8.0 * normal_sf(ETA_TRUNCATION);
    Ok(q)
}

pub fn eta_coefficient(chain: &Chain, lag: usize) -> Result<f64> {
    eta_with_error(chain, lag).map(|q| q.value)
}

/// `alpha-bar_k = 2 sup |H_k|`.
pub fn alpha_bar_coefficient(chain: &Chain, lag: usize) -> Result<f64> {
    lag_ok(lag)?;
    match chain {
        Chain::Finite(c) => Ok(2.0 * finite_h_cells(c, lag).iter().fold(0.0f64, |m, h| m.max(h.abs()))),
        Chain::Ar1(c) => Ok(2.0 * gaussian_sup_abs_h(c.lag_correlation(lag))),
        Chain::Metropolis(_) => Err(unsupported(chain)),
    }
}

/// Maximize `|H|` on a 401 x 401 grid over `[-5, 5]^2`, then refine the
/// best node by compass search.
fn gaussian_sup_abs_h(r: f64) -> f64 {
    if r == 0.0 {
        return 0.0;
    }
    const NODES: usize = 401;
    const HALF: f64 = 5.0;
    let h = 2.0 * HALF / (NODES - 1) as f64;
    let f = |u: f64, v: f64| gaussian_h(r, u, v).abs();
    let mut best = (0.0, 0.0, -1.0);
    for i in 0..NODES {
        let u = -HALF + h * i as f64;
        for j in 0..NODES {
            let v = -HALF + h * j as f64;
            let val = f(u, v);
            if val > best.2 {
                best = (u, v, val);
            }
        }
    }
    let (mut u, mut v, mut val) = best;
    let mut step = h;
    while step > 1e-10 {
        let mut moved = false;
        for (du, dv) in [(step, 0.0), (-step, 0.0), (0.0, step), (0.0, -step)] {
            let cand = f(u + du, v + dv);
            if cand > val {
                u += du;
                v += dv;
                val = cand;
                moved = true;
                break;
            }
        }
        if !moved {
            step *= 0.5;
        }
    }
    val
}

/// Pairwise strong mixing coefficient
/// `alpha_k = sup_{A, B} |P(X_0 in A, X_k in B) - P(X_0 in A) P(X_k in B)|`
/// by enumerating all pairs of state subsets. Only for `S <= 6`.
pub fn alpha_coefficient(chain: &FiniteReversibleChain, lag: usize) -> Result<f64> {
    lag_ok(lag)?;
    let s = chain.n_states();
    if s > 6 {
        return Err(Error::Domain(format!(
            "brute-force alpha needs at most 6 states, got {s}"
        )));
    }
    let joint = chain.joint_law(lag);
    let pi = chain.stationary();
    let subsets = 1usize << s;
    let mass: Vec<f64> = (0..subsets)
        .map(|m| (0..s).filter(|i| m >> i & 1 == 1).map(|i| pi[i]).sum())
        .collect();
    let mut worst = 0.0f64;
    for a in 0..subsets {
        // row sums of J restricted to A
        let rows: Vec<f64> = (0..s)
            .map(|j| (0..s).filter(|i| a >> i & 1 == 1).map(|i| joint[(i, j)]).sum())
            .collect();
        for b in 0..subsets {
            let p_ab: f64 = (0..s).filter(|j| b >> j & 1 == 1).map(|j| rows[j]).sum();
            worst = worst.max((p_ab - mass[a] * mass[b]).abs());
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chains::{build_finite_chain, ChainSpec};
    use std::f64::consts::PI;

    fn two_state(p: f64, q: f64, values: [f64; 2]) -> Chain {
        Chain::Finite(build_finite_chain(values.to_vec(), vec![vec![1.0 - p, p], vec![q, 1.0 - q]]).unwrap())
    }

    fn ar1(rho: f64) -> Chain {
        ChainSpec::Ar1 { rho }.build().unwrap()
    }

    #[test]
    fn two_state_h_eta_alpha_bar() {
        let c = two_state(0.3, 0.3, [0.0, 1.0]);
        let h = h_k_function(&c, 1).unwrap();
        assert!((h.eval(0.5, 0.5) - 0.1).abs() < 1e-15);
        assert_eq!(h.eval(-0.5, 0.5), 0.0);
        assert_eq!(h.eval(0.5, 1.0), 0.0);
        assert!((eta_coefficient(&c, 1).unwrap() - 0.1).abs() < 1e-15);
        assert!((alpha_bar_coefficient(&c, 1).unwrap() - 0.2).abs() < 1e-15);
    }

    #[test]
    fn independent_chains_have_no_dependence() {
        let c = two_state(0.4, 0.6, [0.0, 1.0]);
        for lag in 1..4 {
            assert!(eta_coefficient(&c, lag).unwrap() < 1e-15);
            assert!(alpha_bar_coefficient(&c, lag).unwrap() < 1e-15);
        }
        let g = ar1(0.0);
        assert_eq!(eta_coefficient(&g, 1).unwrap(), 0.0);
        assert_eq!(h_k_function(&g, 2).unwrap().eval(0.3, -0.2), 0.0);
    }

    #[test]
    fn gaussian_h_at_origin() {
        let h = h_k_function(&ar1(0.6), 1).unwrap();
        let want = 0.6f64.asin() / (2.0 * PI);
        assert!((h.eval(0.0, 0.0) - want).abs() < 1e-10);
        assert!((want - 0.102_42).abs() < 1e-5);
        for (u, v) in [(8.0, 0.0), (-8.0, 0.3), (0.0, 8.0), (1.0, -8.0)] {
            assert!(h.eval(u, v).abs() < 1e-13);
        }
    }

    #[test]
    fn gaussian_eta_equals_covariance() {
        let q = eta_with_error(&ar1(0.6), 2).unwrap();
        assert!((q.value - 0.36).abs() < 2e-4, "{}", q.value);
        assert!(q.abs_error_estimate < 1e-6);
    }

    #[test]
    fn gaussian_alpha_bar() {
        let a = alpha_bar_coefficient(&ar1(0.6), 1).unwrap();
        assert!((a - 0.6f64.asin() / PI).abs() < 1e-3);
    }

    #[test]
    fn brute_force_alpha_two_state() {
        // for two states every nontrivial event pair gives |lambda| pi_0 pi_1
        let Chain::Finite(c) = two_state(0.2, 0.3, [0.0, 1.0]) else {
            unreachable!()
        };
        let a = alpha_coefficient(&c, 1).unwrap();
        assert!((a - 0.5 * 0.6 * 0.4).abs() < 1e-15);
        assert!(alpha_coefficient(&c, 0).is_err());
    }

    #[test]
    fn metropolis_has_no_exact_coefficients() {
        let m = ChainSpec::Metropolis {
            target: "std_normal".into(),
            proposal_sd: 2.4,
            burn_in: Some(10),
        }
        .build()
        .unwrap();
        assert!(eta_coefficient(&m, 1).is_err());
    }
}
