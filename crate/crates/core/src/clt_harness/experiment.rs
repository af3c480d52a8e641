use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chains::{center, simulate_path, spectral_decompose, Chain, ChainSpec};
use crate::estimator::{
    bandwidth_regime_check, centering_values, expected_kde, kde_evaluate, studentized_statistic, BandwidthSchedule,
    CenteringMode, RegimeMode, RegimeVerdict,
};
use crate::kernels::Kernel;
use crate::numerics::RngStream;
use crate::{Error, Result};

use super::conditions::{kernel_cross_covariances, KernelTransform, CORRELATION_FLOOR};
use super::normality::{summarize_normality, NormalityDiagnostics, NormalityThresholds};

/// Share of replicates with an invalid coordinate above which the report is
/// flagged.
pub const INVALID_WARNING_FRACTION: f64 = 0.01;

fn default_kernel() -> String {
    "gaussian".into()
}

fn default_centering() -> CenteringMode {
    CenteringMode::ExactExpectation
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CltConfig {
    pub chain: ChainSpec,
    #[serde(default = "default_kernel")]
    pub kernel: String,
    pub points: Vec<f64>,
    pub n: usize,
    pub schedule: BandwidthSchedule,
    pub replicates: usize,
    pub seed: u64,
    #[serde(default = "default_centering")]
    pub centering: CenteringMode,
    #[serde(default)]
    pub thresholds: NormalityThresholds,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CltReport {
    pub config: CltConfig,
    pub seed: u64,
    pub replicates: usize,
    pub n: usize,
    pub bandwidth: f64,
    pub points: Vec<f64>,
    pub centering_values: Vec<f64>,
    pub regime: RegimeVerdict,
    pub diagnostics: NormalityDiagnostics,
    /// Replicates with at least one invalid coordinate; they are left out of
    /// the diagnostics.
    pub invalid_replicates: usize,
    pub warning: Option<String>,
    /// Exact finite-`n` covariance of the linearized statistic, when the
    /// chain admits it.
    pub predicted_covariance: Option<Vec<Vec<f64>>>,
}

impl CltReport {
    pub fn pass(&self) -> bool {
        self.diagnostics.pass.all
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CltRun {
    pub report: CltReport,
    /// `R x m`, replicate order; NaN marks invalid coordinates.
    pub samples: Vec<Vec<f64>>,
}

/// Simulate `R` stationary paths, studentize the estimator at each point and
/// summarize. Replicate `r` uses stream `(seed, r)` for `r = 1..=R`; results
/// are gathered in replicate order, so the output does not depend on
/// `workers`.
pub fn run_clt_experiment(cfg: &CltConfig, workers: usize) -> Result<CltRun> {
    if cfg.replicates == 0 {
        return Err(Error::NoReplicates);
    }
    if cfg.points.is_empty() {
        return Err(Error::Config("points: at least one point is required".into()));
    }
    if cfg.n < 2 {
        return Err(Error::Config(format!("n must be at least 2, got {}", cfg.n)));
    }
    let schedule = BandwidthSchedule::new(cfg.schedule.c, cfg.schedule.beta)?;
    let regime = bandwidth_regime_check(schedule, RegimeMode::Theorem1);
    if let Some(h) = &regime.violated {
        return Err(Error::Regime(h.clone()));
    }
    let kernel = Kernel::by_name(&cfg.kernel)?;
    let chain = cfg.chain.build()?;
    let marginal = chain.marginal();
    for &x in &cfg.points {
        if marginal.density(x).is_some_and(|f| !(f > 0.0)) {
            return Err(Error::Domain(format!("marginal density vanishes at point {x}")));
        }
    }
    let b = schedule.bandwidth(cfg.n);
    let centering = centering_values(&marginal, &kernel, b, &cfg.points, cfg.centering)?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Config(format!("worker pool: {e}")))?;
    let rows: Vec<Result<Vec<f64>>> = pool.install(|| {
        (1..=cfg.replicates as u64)
            .into_par_iter()
            .map(|r| {
                let path = simulate_path(&chain, cfg.n, RngStream::new(cfg.seed, r))?;
                let est = kde_evaluate(&path, &kernel, b, &cfg.points)?;
                Ok(studentized_statistic(&est, &centering, cfg.centering, &kernel)?.values)
            })
            .collect()
    });
    let samples: Vec<Vec<f64>> = rows.into_iter().collect::<Result<_>>()?;

    let valid: Vec<Vec<f64>> = samples
        .iter()
        .filter(|row| row.iter().all(|x| x.is_finite()))
        .cloned()
        .collect();
    let invalid = samples.len() - valid.len();
    let warning = (invalid as f64 > INVALID_WARNING_FRACTION * samples.len() as f64).then(|| {
        format!(
            "{invalid} of {} replicates have an invalid coordinate (estimate is zero)",
            samples.len()
        )
    });
    let diagnostics = summarize_normality(&valid, &cfg.thresholds)?;
    let predicted_covariance = exact_studentized_covariance(&chain, &kernel, &cfg.points, cfg.n, b).ok();

    Ok(CltRun {
        report: CltReport {
            config: cfg.clone(),
            seed: cfg.seed,
            replicates: cfg.replicates,
            n: cfg.n,
            bandwidth: b,
            points: cfg.points.clone(),
            centering_values: centering,
            regime,
            diagnostics,
            invalid_replicates: invalid,
            warning,
            predicted_covariance,
        },
        samples,
    })
}

/// Exact covariance matrix at finite `n` of
/// `sqrt(n b) (f_n(x_j) - E f_n(x_j)) / (E f_n(x_j) int K^2)^{1/2}`,
/// the studentized statistic with its random normalizer replaced by its
/// mean. Built from the lag covariances of the kernel values
/// `gamma_k(j, p) = cov(K((x_j - X_0)/b), K((x_p - X_k)/b))`.
pub fn exact_studentized_covariance(
    chain: &Chain,
    kernel: &Kernel,
    points: &[f64],
    n: usize,
    bandwidth: f64,
) -> Result<Vec<Vec<f64>>> {
    let m = points.len();
    let marginal = chain.marginal();
    let b = bandwidth;
    let nf = n as f64;
    // S = n gamma_0 + sum_{k=1}^{n-1} (n - k)(gamma_k + gamma_k^T)
    let mut s = vec![vec![0.0; m]; m];
    let mut add = |gamma: &[Vec<f64>], weight: f64, both: bool| {
        for j in 0..m {
            for p in 0..m {
                let g = if both { gamma[j][p] + gamma[p][j] } else { gamma[j][p] };
                s[j][p] += weight * g;
            }
        }
    };
    match chain {
        Chain::Ar1(c) => {
            let t = KernelTransform {
                kernel: kernel.clone(),
                points: points.to_vec(),
                weights: vec![1.0; m],
                bandwidth: b,
            };
            add(&kernel_cross_covariances(&t, &marginal, 1.0)?, nf, false);
            for k in 1..n {
                let r = c.lag_correlation(k);
                if r.abs() < CORRELATION_FLOOR {
                    break;
                }
                add(&kernel_cross_covariances(&t, &marginal, r)?, nf - k as f64, true);
            }
        }
        Chain::Finite(c) => {
            let dec = spectral_decompose(c)?;
            let coef: Vec<Vec<f64>> = points
                .iter()
                .map(|&x| dec.coefficients(&center(c, &c.tabulate(|v| kernel.eval((x - v) / b)))))
                .collect::<Result<_>>()?;
            // per eigenvalue: n + 2 sum_{k=1}^{n-1} (n - k) l^k
            let weights: Vec<f64> = dec
                .eigenvalues
                .iter()
                .map(|&l| {
                    let mut acc = 0.0;
                    let mut pw = 1.0;
                    for k in 1..n {
                        pw *= l;
                        if pw.abs() < CORRELATION_FLOOR {
                            break;
                        }
                        acc += (nf - k as f64) * pw;
                    }
                    nf + 2.0 * acc
                })
                .collect();
            let gamma: Vec<Vec<f64>> = (0..m)
                .map(|j| {
                    (0..m)
                        .map(|p| (0..weights.len()).map(|i| weights[i] * coef[j][i] * coef[p][i]).sum())
                        .collect()
                })
                .collect();
            add(&gamma, 1.0, false);
        }
        Chain::Metropolis(_) => {
            return Err(Error::Domain("no exact covariances for a Metropolis chain".into()));
        }
    }
    let l2 = kernel.l2_norm_sq();
    let e: Vec<f64> = points
        .iter()
        .map(|&x| expected_kde(&marginal, kernel, b, x))
        .collect::<Result<_>>()?;
    // Cov(f_j, f_p) = S / (n b)^2, scaled by n b / (int K^2 sqrt(e_j e_p))
    Ok((0..m)
        .map(|j| {
            (0..m)
                .map(|p| s[j][p] / (nf * b) / (l2 * (e[j] * e[p]).sqrt()))
                .collect()
        })
        .collect())
}

/// Correlation matrix from a covariance matrix.
pub fn covariance_to_correlation(cov: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let m = cov.len();
    (0..m)
        .map(|j| {
            (0..m)
                .map(|p| {
                    if j == p {
                        1.0
                    } else {
                        cov[j][p] / (cov[j][j] * cov[p][p]).sqrt()
                    }
                })
                .collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chains::{build_finite_chain, Marginal};

    fn small_config() -> CltConfig {
        CltConfig {
            chain: ChainSpec::Ar1 { rho: 0.3 },
            kernel: "gaussian".into(),
            points: vec![0.0, 1.0],
            n: 2000,
            schedule: BandwidthSchedule { c: 1.0, beta: 0.22 },
            replicates: 150,
            seed: 3,
            centering: CenteringMode::ExactExpectation,
            thresholds: NormalityThresholds::default(),
        }
    }

    #[test]
    fn worker_count_does_not_change_output() {
        let cfg = small_config();
        let a = run_clt_experiment(&cfg, 1).unwrap();
        let b = run_clt_experiment(&cfg, 4).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn degenerate_configs() {
        let mut cfg = small_config();
        cfg.replicates = 0;
        assert!(matches!(run_clt_experiment(&cfg, 1), Err(Error::NoReplicates)));
        let mut cfg = small_config();
        cfg.schedule.beta = 0.3;
        assert!(matches!(run_clt_experiment(&cfg, 1), Err(Error::Regime(_))));
    }

    #[test]
    fn exact_covariance_iid_closed_form() {
        // independent draws: Var = (E K^2 - (E K)^2) / (b E f int K^2)
        let chain = ChainSpec::Ar1 { rho: 0.0 }.build().unwrap();
        let k = Kernel::gaussian();
        let b = 0.2;
        let cov = exact_studentized_covariance(&chain, &k, &[0.0], 1000, b).unwrap();
        let e = expected_kde(&Marginal::StdNormal, &k, b, 0.0).unwrap();
        let ek2 = b / (2.0 * std::f64::consts::PI * (2.0 + b * b).sqrt());
        let want = (ek2 - (b * e).powi(2)) / (b * e * k.l2_norm_sq());
        assert!((cov[0][0] - want).abs() < 1e-12);
    }

    #[test]
    fn exact_covariance_finite_matches_brute_force() {
        let c = build_finite_chain(vec![0.0, 1.0], vec![vec![0.8, 0.2], vec![0.3, 0.7]]).unwrap();
        let chain = Chain::Finite(c.clone());
        let k = Kernel::gaussian();
        let (n, b, x) = (40, 0.5, 0.25);
        let cov = exact_studentized_covariance(&chain, &k, &[x], n, b).unwrap();
        let kv = center(&c, &c.tabulate(|v| k.eval((x - v) / b)));
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                s += crate::chains::direct_lag_covariance(&c, &kv, i.abs_diff(j)).unwrap();
            }
        }
        let e = expected_kde(&chain.marginal(), &k, b, x).unwrap();
        let want = s / (n as f64 * b) / (k.l2_norm_sq() * e);
        assert!((cov[0][0] - want).abs() < 1e-10 * want.abs().max(1.0));
    }
}
