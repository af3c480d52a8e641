use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::chains::{center, spectral_decompose, Ar1Chain, Chain, FiniteReversibleChain, Marginal};
use crate::estimator::{expected_kde, BandwidthSchedule};
use crate::kernels::Kernel;
use crate::numerics::{
    bivariate_normal_pdf, integrate_with_breaks, normal_pdf, quadrature_2d_with_breaks, QuadratureConfig, Rect,
};
use crate::{Error, Result};

/// Lags whose AR(1) correlation falls below this are dropped from the sums.
pub const CORRELATION_FLOOR: f64 = 1e-16;
const TRUNCATION: f64 = 8.0;

/// The weighted kernel transform
/// `x -> b^{-1/2} sum_j w_j K((x_j - x)/b)` with
/// `w_j = lambda_j / (f(x_j) int K^2)^{1/2}`.
#[derive(Debug, Clone)]
pub struct KernelTransform {
    pub kernel: Kernel,
    pub points: Vec<f64>,
    pub weights: Vec<f64>,
    pub bandwidth: f64,
}

impl KernelTransform {
    /// `f` is the marginal density; discrete marginals use unit reference
    /// density.
    pub fn new(marginal: &Marginal, kernel: &Kernel, points_weights: &[(f64, f64)], bandwidth: f64) -> Result<Self> {
        if points_weights.is_empty() {
            return Err(Error::Domain("at least one point is required".into()));
        }
        let l2 = kernel.l2_norm_sq();
        let weights = points_weights
            .iter()
            .map(|&(x, lambda)| {
                let f = marginal.reference_density(x);
                if f > 0.0 {
                    Ok(lambda / (f * l2).sqrt())
                } else {
                    Err(Error::Domain(format!("marginal density vanishes at {x}")))
                }
            })
            .collect::<Result<_>>()?;
        Ok(Self {
            kernel: kernel.clone(),
            points: points_weights.iter().map(|p| p.0).collect(),
            weights,
            bandwidth,
        })
    }

    /// Uncentered transform at `x`.
    pub fn raw(&self, x: f64) -> f64 {
        let b = self.bandwidth;
        self.points
            .iter()
            .zip(&self.weights)
            .map(|(xj, w)| w * self.kernel.eval((xj - x) / b))
            .sum::<f64>()
            / b.sqrt()
    }

    /// `sum_j lambda_j^2`, the limiting variance.
    pub fn target_variance(&self, marginal: &Marginal) -> f64 {
        let l2 = self.kernel.l2_norm_sq();
        self.points
            .iter()
            .zip(&self.weights)
            .map(|(x, w)| w * w * marginal.reference_density(*x) * l2)
            .sum()
    }

    fn breaks(&self) -> Vec<f64> {
        let b = self.bandwidth;
        let mut v = vec![-TRUNCATION, TRUNCATION];
        for x in &self.points {
            for m in [-6.0, -3.0, -1.0, 0.0, 1.0, 3.0, 6.0] {
                let p = x + m * b;
                if p > -TRUNCATION && p < TRUNCATION {
                    v.push(p);
                }
            }
        }
        v.sort_by(f64::total_cmp);
        v.dedup();
        v
    }
}

/// `E K((x - X)/b) K((y - Y)/b)` for a Gaussian kernel and `(X, Y)`
/// standard bivariate normal with correlation `r` (`r = 1` allowed):
/// `b^2` times the density at `(x, y)` of `(X + bS, Y + bT)`.
pub fn gaussian_pair_moment(x: f64, y: f64, b: f64, r: f64) -> f64 {
    let s2 = 1.0 + b * b;
    let det = s2 * s2 - r * r;
    let q = (s2 * x * x - 2.0 * r * x * y + s2 * y * y) / det;
    b * b * (-0.5 * q).exp() / (2.0 * PI * det.sqrt())
}

/// The same moment for any kernel, by quadrature in kernel coordinates.
pub fn quadrature_pair_moment(kernel: &Kernel, x: f64, y: f64, b: f64, r: f64) -> Result<f64> {
    let breaks = kernel.integration_breaks();
    let (lo, hi) = (breaks[0], breaks[breaks.len() - 1]);
    let cfg = QuadratureConfig {
        abs_tol: 1e-13,
        max_subdivisions: 200_000,
    };
    if r >= 1.0 {
        let d = (y - x) / b;
        let mut br = breaks.clone();
        br.extend(breaks.iter().map(|p| p - d).filter(|p| *p > lo && *p < hi));
        br.sort_by(f64::total_cmp);
        br.dedup();
        let q = integrate_with_breaks(
            |s| kernel.eval(s) * kernel.eval(s + d) * normal_pdf(x - b * s),
            &br,
            &cfg,
        )?;
        return Ok(b * q.value);
    }
    let inner = &breaks[1..breaks.len() - 1];
    let q = quadrature_2d_with_breaks(
        |s, t| kernel.eval(s) * kernel.eval(t) * bivariate_normal_pdf(x - b * s, y - b * t, r),
        Rect::new(lo, hi, lo, hi),
        inner,
        inner,
        &cfg,
    )?;
    Ok(b * b * q.value)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CltConditionReport {
    pub n: usize,
    pub bandwidth: f64,
    /// `(E X_{n,0}^2, sum_j lambda_j^2)`.
    pub var_limit_check: (f64, f64),
    /// `cov(X_{n,0}, X_{n,2}) + sum_{k=2}^{n} cov(X_{n,0}, X_{n,k})`.
    pub neglcov_value: f64,
    /// `(1/n)(var(X_{n,0}^2) + sum_{u=0}^{n} cov(X_{n,0}^2, X_{n,u}^2))`.
    pub secondcond_value: f64,
    /// Last lag kept in the sums (AR(1): where `|rho|^k` drops below `1e-16`).
    pub lags_summed: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionSweep {
    pub reports: Vec<CltConditionReport>,
    pub nonnegative: bool,
    pub neglcov_decreasing: bool,
    pub secondcond_decreasing: bool,
}

fn strictly_decreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] < w[0])
}

/// Evaluate the triangular-array CLT conditions for the kernel transform
/// along `n_grid`: exactly (spectrally) for finite chains, by closed form and
/// quadrature for the AR(1).
pub fn check_clt_conditions(
    chain: &Chain,
    kernel: &Kernel,
    points_weights: &[(f64, f64)],
    n_grid: &[usize],
    schedule: BandwidthSchedule,
) -> Result<ConditionSweep> {
    let cc = kernel.condition_c();
    if !cc.c3 || kernel.deriv_sup_norm().is_none() {
        return Err(Error::KernelNotSmooth(format!("kernel {:?} fails C3", kernel.name())));
    }
    let marginal = chain.marginal();
    let reports = n_grid
        .iter()
        .map(|&n| {
            if n < 2 {
                return Err(Error::Domain(format!("n must be at least 2, got {n}")));
            }
            let b = schedule.bandwidth(n);
            let t = KernelTransform::new(&marginal, kernel, points_weights, b)?;
            match chain {
                Chain::Finite(c) => Ok(finite_conditions(c, &t, &marginal, n)),
                Chain::Ar1(c) => ar1_conditions(c, &t, &marginal, n),
                Chain::Metropolis(_) => Err(Error::Domain(
                    "CLT conditions need exact covariances: use a finite or AR(1) chain".into(),
                )),
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let negl: Vec<f64> = reports.iter().map(|r| r.neglcov_value).collect();
    let second: Vec<f64> = reports.iter().map(|r| r.secondcond_value).collect();
    Ok(ConditionSweep {
        nonnegative: negl.iter().chain(&second).all(|v| *v >= 0.0),
        neglcov_decreasing: strictly_decreasing(&negl),
        secondcond_decreasing: strictly_decreasing(&second),
        reports,
    })
}

/// `sum_{k=from}^{to} l^k`.
fn power_sum(l: f64, from: usize, to: usize) -> f64 {
    if to < from {
        return 0.0;
    }
    let count = (to - from + 1) as f64;
    if (1.0 - l).abs() < 1e-14 {
        return count;
    }
    let p = |e: usize| l.powi(i32::try_from(e).unwrap_or(i32::MAX));
    p(from) * (1.0 - p(to - from + 1)) / (1.0 - l)
}

fn finite_conditions(
    chain: &FiniteReversibleChain,
    t: &KernelTransform,
    marginal: &Marginal,
    n: usize,
) -> CltConditionReport {
    let dec = spectral_decompose(chain).expect("validated chain");
    let g = center(chain, &chain.tabulate(|x| t.raw(x)));
    let c = dec.coefficients(&g).expect("state-sized vector");
    let ex2 = chain.inner(&g, &g);
    let neglcov: f64 = dec
        .eigenvalues
        .iter()
        .zip(&c)
        .map(|(&l, ci)| ci * ci * (l * l + power_sum(l, 2, n)))
        .sum();

    let g2: Vec<f64> = g.iter().map(|x| x * x).collect();
    let q = center(chain, &g2);
    let d = dec.coefficients(&q).expect("state-sized vector");
    let var_sq = chain.inner(&q, &q);
    let cov_sum: f64 = dec
        .eigenvalues
        .iter()
        .zip(&d)
        .map(|(&l, di)| di * di * power_sum(l, 0, n))
        .sum();
    CltConditionReport {
        n,
        bandwidth: t.bandwidth,
        var_limit_check: (ex2, t.target_variance(marginal)),
        neglcov_value: neglcov,
        secondcond_value: (var_sq + cov_sum) / n as f64,
        lags_summed: n,
    }
}

/// `cov(K_j(X_0), K_p(X_k))` for all point pairs at correlation `r`.
pub(crate) fn kernel_cross_covariances(t: &KernelTransform, marginal: &Marginal, r: f64) -> Result<Vec<Vec<f64>>> {
    let b = t.bandwidth;
    let means: Vec<f64> = t
        .points
        .iter()
        .map(|&x| expected_kde(marginal, &t.kernel, b, x).map(|e| b * e))
        .collect::<Result<_>>()?;
    let gaussian = t.kernel.name() == "gaussian";
    let m = t.points.len();
    let mut out = vec![vec![0.0; m]; m];
    for j in 0..m {
        for p in 0..m {
            let (xj, xp) = (t.points[j], t.points[p]);
            let moment = if gaussian {
                gaussian_pair_moment(xj, xp, b, r)
            } else {
                quadrature_pair_moment(&t.kernel, xj, xp, b, r)?
            };
            out[j][p] = moment - means[j] * means[p];
        }
    }
    Ok(out)
}

fn transform_covariance(t: &KernelTransform, gamma: &[Vec<f64>]) -> f64 {
    let mut s = 0.0;
    for (j, row) in gamma.iter().enumerate() {
        for (p, g) in row.iter().enumerate() {
            s += t.weights[j] * t.weights[p] * g;
        }
    }
    s / t.bandwidth
}

fn ar1_conditions(chain: &Ar1Chain, t: &KernelTransform, marginal: &Marginal, n: usize) -> Result<CltConditionReport> {
    let cov = |k: usize| -> Result<f64> {
        let r = if k == 0 { 1.0 } else { chain.lag_correlation(k) };
        Ok(transform_covariance(t, &kernel_cross_covariances(t, marginal, r)?))
    };
    let ex2 = cov(0)?;
    let mut last = 2.min(n);
    let c2 = cov(2)?;
    let mut neglcov = c2;
    for k in 2..=n {
        if chain.lag_correlation(k).abs() < CORRELATION_FLOOR {
            break;
        }
        neglcov += if k == 2 { c2 } else { cov(k)? };
        last = k;
    }

    // squared transform, centered
    let b = t.bandwidth;
    let breaks = t.breaks();
    let cfg = QuadratureConfig::with_tol(1e-11);
    let mean_raw = t
        .points
        .iter()
        .zip(&t.weights)
        .map(|(&x, w)| expected_kde(marginal, &t.kernel, b, x).map(|e| w * b * e))
        .sum::<Result<f64>>()?
        / b.sqrt();
    let g = |x: f64| t.raw(x) - mean_raw;
    let q = |x: f64| {
        let v = g(x);
        v * v - ex2
    };
    let var_sq = integrate_with_breaks(|x| q(x) * q(x) * normal_pdf(x), &breaks, &cfg)?.value;
    let inner = &breaks[1..breaks.len() - 1];
    let cfg2 = QuadratureConfig {
        abs_tol: 1e-9,
        max_subdivisions: 400_000,
    };
    let mut cov_sum = var_sq;
    for u in 1..=n {
        let r = chain.lag_correlation(u);
        if r.abs() < CORRELATION_FLOOR {
            break;
        }
        let v = quadrature_2d_with_breaks(
            |x, y| q(x) * q(y) * bivariate_normal_pdf(x, y, r),
            Rect::square(-TRUNCATION, TRUNCATION),
            inner,
            inner,
            &cfg2,
        )?;
        cov_sum += v.value;
        last = last.max(u);
    }
    Ok(CltConditionReport {
        n,
        bandwidth: b,
        var_limit_check: (ex2, t.target_variance(marginal)),
        neglcov_value: neglcov,
        secondcond_value: (var_sq + cov_sum) / n as f64,
        lags_summed: last,
    })
}
