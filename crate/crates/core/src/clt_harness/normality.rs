use serde::{Deserialize, Serialize};

use crate::numerics::{ks_statistic, normal_cdf, pairwise_sum};
use crate::{Error, Result};

pub const MIN_REPLICATES: usize = 100;

/// Gates applied to the Monte Carlo sample of studentized vectors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NormalityThresholds {
    pub mean_abs: f64,
    pub variance_min: f64,
    pub variance_max: f64,
    pub ks: f64,
    pub correlation_abs: f64,
}

impl Default for NormalityThresholds {
    fn default() -> Self {
        Self {
            mean_abs: 0.1,
            variance_min: 0.85,
            variance_max: 1.15,
            ks: 0.05,
            correlation_abs: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoordinateSummary {
    pub mean: f64,
    pub variance: f64,
    /// Reported, not gated.
    pub skewness: f64,
    pub ks: f64,
    pub pass_mean: bool,
    pub pass_variance: bool,
    pub pass_ks: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PassFlags {
    pub mean: bool,
    pub variance: bool,
    pub ks: bool,
    pub correlation: bool,
    pub all: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalityDiagnostics {
    pub replicates: usize,
    pub coordinates: Vec<CoordinateSummary>,
    /// `m x m`, unit diagonal; `None` off the diagonal when a coordinate
    /// has zero variance.
    pub correlation: Vec<Vec<Option<f64>>>,
    pub max_abs_correlation: Option<f64>,
    pub pass: PassFlags,
}

/// Per-coordinate moments and KS distance to `N(0, 1)`, plus the sample
/// correlation matrix, for an `R x m` sample (rows are replicates).
pub fn summarize_normality(samples: &[Vec<f64>], thresholds: &NormalityThresholds) -> Result<NormalityDiagnostics> {
    let r = samples.len();
    if r < MIN_REPLICATES {
        return Err(Error::InsufficientReplicates {
            got: r,
            min: MIN_REPLICATES,
        });
    }
    let m = samples[0].len();
    if m == 0 || samples.iter().any(|row| row.len() != m) {
        return Err(Error::Domain("sample rows must share a nonzero length".into()));
    }
    if samples.iter().flatten().any(|x| !x.is_finite()) {
        return Err(Error::Domain("samples must be finite".into()));
    }
    let rf = r as f64;
    let columns: Vec<Vec<f64>> = (0..m).map(|j| samples.iter().map(|row| row[j]).collect()).collect();
    let means: Vec<f64> = columns.iter().map(|c| pairwise_sum(c) / rf).collect();
    let centered: Vec<Vec<f64>> = columns
        .iter()
        .zip(&means)
        .map(|(c, mu)| c.iter().map(|x| x - mu).collect())
        .collect();
    let moment = |c: &[f64], p: i32| pairwise_sum(&c.iter().map(|x| x.powi(p)).collect::<Vec<_>>()) / rf;

    let mut coordinates = Vec::with_capacity(m);
    for (j, c) in centered.iter().enumerate() {
        let m2 = moment(c, 2);
        let variance = m2 * rf / (rf - 1.0);
        let skewness = if m2 > 0.0 { moment(c, 3) / m2.powf(1.5) } else { 0.0 };
        let mut sorted = columns[j].clone();
        sorted.sort_by(f64::total_cmp);
        let ks = ks_statistic(&sorted, normal_cdf)?;
        coordinates.push(CoordinateSummary {
            mean: means[j],
            variance,
            skewness,
            ks,
            pass_mean: means[j].abs() < thresholds.mean_abs,
            pass_variance: variance >= thresholds.variance_min && variance <= thresholds.variance_max,
            pass_ks: ks < thresholds.ks,
        });
    }

    let mut correlation = vec![vec![None; m]; m];
    let mut max_abs: Option<f64> = None;
    let mut corr_ok = true;
    for a in 0..m {
        correlation[a][a] = Some(1.0);
        for b in (a + 1)..m {
            let saa = moment(&centered[a], 2);
            let sbb = moment(&centered[b], 2);
            let prod: Vec<f64> = centered[a].iter().zip(&centered[b]).map(|(x, y)| x * y).collect();
            let value = if saa > 0.0 && sbb > 0.0 {
                Some(pairwise_sum(&prod) / rf / (saa * sbb).sqrt())
            } else {
                None
            };
            correlation[a][b] = value;
            correlation[b][a] = value;
            match value {
                Some(v) => {
                    max_abs = Some(max_abs.map_or(v.abs(), |x: f64| x.max(v.abs())));
                    corr_ok &= v.abs() < thresholds.correlation_abs;
                }
                None => corr_ok = false,
            }
        }
    }
    let mean = coordinates.iter().all(|c| c.pass_mean);
    let variance = coordinates.iter().all(|c| c.pass_variance);
    let ks = coordinates.iter().all(|c| c.pass_ks);
    Ok(NormalityDiagnostics {
        replicates: r,
        coordinates,
        correlation,
        max_abs_correlation: max_abs,
        pass: PassFlags {
            mean,
            variance,
            ks,
            correlation: corr_ok,
            all: mean && variance && ks && corr_ok,
        },
    })
}
