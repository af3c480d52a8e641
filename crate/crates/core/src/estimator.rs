//! Rosenblatt kernel density estimator, its exact expectation, the
//! second-order bias term and the self-normalized statistic.

use serde::{Deserialize, Serialize};

use crate::chains::Marginal;
use crate::kernels::Kernel;
use crate::numerics::{integrate_with_breaks, pairwise_sum, QuadratureConfig};
use crate::{Error, Result};

/// `b_n = c n^{-beta}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BandwidthSchedule {
    pub c: f64,
    pub beta: f64,
}

impl BandwidthSchedule {
    pub fn new(c: f64, beta: f64) -> Result<Self> {
        if !(c > 0.0) || !c.is_finite() {
            return Err(Error::Domain(format!("bandwidth constant c must be positive, got {c}")));
        }
        if !beta.is_finite() {
            return Err(Error::Domain("bandwidth exponent must be finite".into()));
        }
        Ok(Self { c, beta })
    }

    pub fn bandwidth(&self, n: usize) -> f64 {
        self.c * (n as f64).powf(-self.beta)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegimeMode {
    /// `b_n -> 0` and `n b_n^4 -> inf`.
    Theorem1,
    /// Additionally `n b_n^5 -> 0`.
    Corollary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeVerdict {
    pub pass: bool,
    pub mode: RegimeMode,
    pub beta: f64,
    /// Exponent of `n` in `n b_n^4`.
    pub nb4_exponent: f64,
    /// Exponent of `n` in `n b_n^5`.
    pub nb5_exponent: f64,
    pub violated: Option<String>,
}

pub const HYP_BANDWIDTH_VANISHES: &str = "b_n -> 0";
pub const HYP_NB4: &str = "nb_n^4 -> infinity";
pub const HYP_NB5: &str = "nb_n^5 -> 0";

/// Exact exponent algebra: `n b_n^4 ~ n^{1 - 4 beta}`, `n b_n^5 ~ n^{1 - 5 beta}`.
pub fn bandwidth_regime_check(schedule: BandwidthSchedule, mode: RegimeMode) -> RegimeVerdict {
    let beta = schedule.beta;
    let violated = if !(beta > 0.0) {
        Some(HYP_BANDWIDTH_VANISHES)
    } else if !(beta < 0.25) {
        Some(HYP_NB4)
    } else if mode == RegimeMode::Corollary && !(beta > 0.2) {
        Some(HYP_NB5)
    } else {
        None
    };
    RegimeVerdict {
        pass: violated.is_none(),
        mode,
        beta,
        nb4_exponent: 1.0 - 4.0 * beta,
        nb5_exponent: 1.0 - 5.0 * beta,
        violated: violated.map(str::to_string),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityEstimate {
    pub points: Vec<f64>,
    pub values: Vec<f64>,
    pub n: usize,
    pub bandwidth: f64,
    pub kernel: String,
}

/// `f_n(x) = (1/(n b)) sum_k K((x - X_k)/b)` at each point, summed pairwise.
pub fn kde_evaluate(path: &[f64], kernel: &Kernel, bandwidth: f64, points: &[f64]) -> Result<DensityEstimate> {
    if path.is_empty() {
        return Err(Error::Domain("empty path".into()));
    }
    if !(bandwidth > 0.0) || !bandwidth.is_finite() {
        return Err(Error::Domain(format!("bandwidth must be positive, got {bandwidth}")));
    }
    let n = path.len();
    let scale = 1.0 / (n as f64 * bandwidth);
    let mut buf = vec![0.0; n];
    let values = points
        .iter()
        .map(|&x| {
            for (slot, &xk) in buf.iter_mut().zip(path) {
                *slot = kernel.eval((x - xk) / bandwidth);
            }
            pairwise_sum(&buf) * scale
        })
        .collect();
    Ok(DensityEstimate {
        points: points.to_vec(),
        values,
        n,
        bandwidth,
        kernel: kernel.name().to_string(),
    })
}

/// Exact `E f_n(x) = int K(u) f(x + b u) du`, independent of `n`. For a
/// discrete marginal this is `(1/b) sum_i pi_i K((x - x_i)/b)`.
pub fn expected_kde(marginal: &Marginal, kernel: &Kernel, bandwidth: f64, point: f64) -> Result<f64> {
    if !(bandwidth > 0.0) {
        return Err(Error::Domain(format!("bandwidth must be positive, got {bandwidth}")));
    }
    match marginal {
        Marginal::Discrete { values, probs } => Ok(values
            .iter()
            .zip(probs)
            .map(|(v, p)| p * kernel.eval((point - v) / bandwidth))
            .sum::<f64>()
            / bandwidth),
        _ => {
            let mut breaks = kernel.integration_breaks();
            let (lo, hi) = (breaks[0], breaks[breaks.len() - 1]);
            if let Marginal::Uniform { lo: a, hi: b } = marginal {
                for edge in [(a - point) / bandwidth, (b - point) / bandwidth] {
                    if edge > lo && edge < hi {
                        breaks.push(edge);
                    }
                }
                breaks.sort_by(f64::total_cmp);
                breaks.dedup();
            }
            let f = |u: f64| kernel.eval(u) * marginal.density(point + bandwidth * u).unwrap_or(0.0);
            Ok(integrate_with_breaks(f, &breaks, &QuadratureConfig::with_tol(1e-13))?.value)
        }
    }
}

/// `(b^2 / 2) f''(x)`.
pub fn bias_second_order(f_second_derivative: f64, bandwidth: f64) -> f64 {
    0.5 * bandwidth * bandwidth * f_second_derivative
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CenteringMode {
    /// `E f_n(x_j)` by quadrature.
    ExactExpectation,
    /// `f(x_j)`.
    TrueDensity,
    /// No centering at all; a negative control.
    Zero,
}

/// Centering values for each point.
pub fn centering_values(
    marginal: &Marginal,
    kernel: &Kernel,
    bandwidth: f64,
    points: &[f64],
    mode: CenteringMode,
) -> Result<Vec<f64>> {
    points
        .iter()
        .map(|&x| match mode {
            CenteringMode::ExactExpectation => expected_kde(marginal, kernel, bandwidth, x),
            CenteringMode::TrueDensity => marginal
                .density(x)
                .ok_or_else(|| Error::Domain("true-density centering needs a marginal with a density".into())),
            CenteringMode::Zero => Ok(0.0),
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudentizedStat {
    /// NaN where the coordinate is invalid.
    pub values: Vec<f64>,
    pub invalid: Vec<Option<String>>,
    pub centering_mode: CenteringMode,
}

impl StudentizedStat {
    pub fn all_valid(&self) -> bool {
        self.invalid.iter().all(Option::is_none)
    }
}

/// `sqrt(n b) (f_n(x_j) - centering_j) / (f_n(x_j) int K^2)^{1/2}`,
/// self-normalized by the estimate. Coordinates with `f_n(x_j) <= 0` are
/// flagged rather than computed.
pub fn studentized_statistic(
    estimate: &DensityEstimate,
    centering: &[f64],
    centering_mode: CenteringMode,
    kernel: &Kernel,
) -> Result<StudentizedStat> {
    if centering.len() != estimate.values.len() {
        return Err(Error::Domain(format!(
            "{} centering values for {} points",
            centering.len(),
            estimate.values.len()
        )));
    }
    let root_nb = (estimate.n as f64 * estimate.bandwidth).sqrt();
    let l2 = kernel.l2_norm_sq();
    let mut values = Vec::with_capacity(centering.len());
    let mut invalid = Vec::with_capacity(centering.len());
    for (&f, &c) in estimate.values.iter().zip(centering) {
        if f > 0.0 && f.is_finite() {
            values.push(root_nb * (f - c) / (f * l2).sqrt());
            invalid.push(None);
        } else {
            values.push(f64::NAN);
            invalid.push(Some(format!("estimate is {f} at this point")));
        }
    }
    Ok(StudentizedStat {
        values,
        invalid,
        centering_mode,
    })
}
