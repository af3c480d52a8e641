use std::f64::consts::E;

use serde::{Deserialize, Serialize};

use crate::chains::Chain;
use crate::{Error, Result};

use super::coefficients::{alpha_bar_coefficient, alpha_coefficient, eta_coefficient};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Exact,
    Empirical,
}

/// Dependence coefficients over a set of lags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DependenceProfile {
    pub lags: Vec<usize>,
    pub eta: Vec<f64>,
    pub alpha_bar: Vec<f64>,
    pub alpha: Option<Vec<f64>>,
    pub provenance: Vec<Provenance>,
    /// Set for plug-in estimates, whose bias is not quantified.
    pub warning: Option<String>,
}

impl DependenceProfile {
    /// Profile from given values, all marked exact.
    pub fn from_values(lags: Vec<usize>, eta: Vec<f64>, alpha_bar: Vec<f64>, alpha: Option<Vec<f64>>) -> Result<Self> {
        let n = lags.len();
        if n == 0 {
            return Err(Error::Domain("profile needs at least one lag".into()));
        }
        if eta.len() != n || alpha_bar.len() != n || alpha.as_ref().is_some_and(|a| a.len() != n) {
            return Err(Error::Domain("profile columns must have equal length".into()));
        }
        if lags.windows(2).any(|w| w[1] <= w[0]) || lags[0] == 0 {
            return Err(Error::Domain("lags must be positive and increasing".into()));
        }
        Ok(Self {
            provenance: vec![Provenance::Exact; n],
            lags,
            eta,
            alpha_bar,
            alpha,
            warning: None,
        })
    }

    pub fn len(&self) -> usize {
        self.lags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lags.is_empty()
    }
}

/// Exact profile for an oracle chain; brute-force `alpha_k` is included for
/// finite chains with at most six states.
pub fn exact_profile(chain: &Chain, lags: &[usize]) -> Result<DependenceProfile> {
    let eta = lags
        .iter()
        .map(|&k| eta_coefficient(chain, k))
        .collect::<Result<Vec<_>>>()?;
    let alpha_bar = lags
        .iter()
        .map(|&k| alpha_bar_coefficient(chain, k))
        .collect::<Result<Vec<_>>>()?;
    let alpha = match chain {
        Chain::Finite(c) if c.n_states() <= 6 => Some(
            lags.iter()
                .map(|&k| alpha_coefficient(c, k))
                .collect::<Result<Vec<_>>>()?,
        ),
        _ => None,
    };
    DependenceProfile::from_values(lags.to_vec(), eta, alpha_bar, alpha)
}

/// Plug-in estimate of `eta_k` and `alpha-bar_k` from one path, using
/// empirical joint survival functions on a `grid x grid` lattice spanning the
/// sample range. Diagnostic only: the result carries a warning.
pub fn empirical_profile(path: &[f64], lags: &[usize], grid: usize) -> Result<DependenceProfile> {
    if grid < 2 {
        return Err(Error::Domain("grid needs at least two nodes".into()));
    }
    let lo = path.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = path.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(hi > lo) {
        return Err(Error::Domain("path must contain at least two distinct values".into()));
    }
    let step = (hi - lo) / grid as f64;
    let bin = |x: f64| (((x - lo) / step) as usize).min(grid - 1);
    let mut eta = Vec::with_capacity(lags.len());
    let mut alpha_bar = Vec::with_capacity(lags.len());
    for &k in lags {
        if k == 0 || k >= path.len() {
            return Err(Error::Domain(format!(
                "lag {k} out of range for a path of length {}",
                path.len()
            )));
        }
        let m = path.len() - k;
        let mut counts = vec![0.0; grid * grid];
        let mut first = vec![0.0; grid];
        let mut second = vec![0.0; grid];
        for i in 0..m {
            let (a, b) = (bin(path[i]), bin(path[i + k]));
            counts[a * grid + b] += 1.0;
            first[a] += 1.0;
            second[b] += 1.0;
        }
        // survival at node u_a = lo + (a + 1) step: mass in bins > a
        let mut joint = vec![0.0; (grid + 1) * (grid + 1)];
        for a in (0..grid).rev() {
            for b in (0..grid).rev() {
                joint[a * (grid + 1) + b] =
                    counts[a * grid + b] + joint[(a + 1) * (grid + 1) + b] + joint[a * (grid + 1) + b + 1]
                        - joint[(a + 1) * (grid + 1) + b + 1];
            }
        }
        let tail = |v: &[f64]| {
            let mut t = vec![0.0; grid + 1];
            for a in (0..grid).rev() {
                t[a] = t[a + 1] + v[a];
            }
            t
        };
        let (t1, t2) = (tail(&first), tail(&second));
        let mf = m as f64;
        let mut sum = 0.0;
        let mut sup = 0.0f64;
        for a in 1..grid {
            for b in 1..grid {
                let h = joint[a * (grid + 1) + b] / mf - (t1[a] / mf) * (t2[b] / mf);
                sum += h.abs();
                sup = sup.max(h.abs());
            }
        }
        eta.push(sum * step * step);
        alpha_bar.push(2.0 * sup);
    }
    let mut p = DependenceProfile::from_values(lags.to_vec(), eta, alpha_bar, None)?;
    p.provenance = vec![Provenance::Empirical; lags.len()];
    p.warning = Some("plug-in estimate from a simulated path; bias not quantified".into());
    Ok(p)
}

/// Slowly varying function `l` in the decay condition `eta_k <= 1/(k^4 l(k))`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SlowlyVarying {
    /// `log(x + e)`
    Log,
    /// `log log(x + e^e)`
    IteratedLog,
    /// `1` up to `x = 10`, then `1 + log(x / 10)`
    Ramp,
}

impl SlowlyVarying {
    pub const RAMP_KNEE: f64 = 10.0;

    pub fn eval(&self, x: f64) -> f64 {
        match self {
            SlowlyVarying::Log => (x + E).ln(),
            SlowlyVarying::IteratedLog => (x + E.powf(E)).ln().ln(),
            SlowlyVarying::Ramp => {
                if x <= Self::RAMP_KNEE {
                    1.0
                } else {
                    1.0 + (x / Self::RAMP_KNEE).ln()
                }
            }
        }
    }

    pub fn by_name(name: &str) -> Result<Self> {
        match name {
            "log" => Ok(SlowlyVarying::Log),
            "iterated_log" => Ok(SlowlyVarying::IteratedLog),
            "ramp" => Ok(SlowlyVarying::Ramp),
            other => Err(Error::Config(format!(
                "unknown slowly varying function {other:?} (expected log | iterated_log | ramp)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EtaDecayVerdict {
    pub pass: bool,
    pub first_violation: Option<usize>,
    /// Largest violating lag; lags beyond it satisfy the bound, which is what
    /// an "eventually" reading of the condition asks for.
    pub last_violation: Option<usize>,
    /// `1/(k^4 l(k))` per lag.
    pub bounds: Vec<f64>,
    pub pass_per_lag: Vec<bool>,
}

/// Check `eta_k <= 1/(k^4 l(k))` at every lag of the profile.
pub fn check_eta_decay_condition(profile: &DependenceProfile, l: SlowlyVarying) -> EtaDecayVerdict {
    let bounds: Vec<f64> = profile
        .lags
        .iter()
        .map(|&k| {
            let k = k as f64;
            1.0 / (k.powi(4) * l.eval(k))
        })
        .collect();
    let pass_per_lag: Vec<bool> = profile.eta.iter().zip(&bounds).map(|(e, b)| e <= b).collect();
    let violating = || {
        profile
            .lags
            .iter()
            .zip(&pass_per_lag)
            .filter(|(_, ok)| !**ok)
            .map(|(k, _)| *k)
    };
    EtaDecayVerdict {
        pass: pass_per_lag.iter().all(|&x| x),
        first_violation: violating().next(),
        last_violation: violating().next_back(),
        bounds,
        pass_per_lag,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TailModel {
    Geometric,
    Polynomial,
    /// Whichever of the two fits better.
    Auto,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Summability {
    Summable,
    NotSummable,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummabilityReport {
    pub verdict: Summability,
    /// `sum_k k alpha_k` over the profile's lags.
    pub partial_sum: f64,
    pub model: Option<TailModel>,
    /// Geometric ratio or polynomial decay exponent of the fitted tail.
    pub fitted_parameter: Option<f64>,
}

fn least_squares(x: &[f64], y: &[f64]) -> Option<(f64, f64)> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|b| (b - my) * (b - my)).sum();
    if !(sxx > 0.0) {
        return None;
    }
    let slope = sxy / sxx;
    let r2 = if syy > 0.0 { sxy * sxy / (sxx * syy) } else { 1.0 };
    (slope.is_finite() && r2.is_finite()).then_some((slope, r2))
}

/// Partial sum of `k alpha_k` and a verdict on `sum k alpha_k < inf` from a
/// fit to the tail half of the profile: geometric decay is summable,
/// polynomial decay `k^-p` is summable iff `p > 2`.
pub fn check_alpha_summability(profile: &DependenceProfile, tail_model: TailModel) -> Result<SummabilityReport> {
    let alpha = profile
        .alpha
        .as_ref()
        .ok_or_else(|| Error::Domain("profile has no alpha entries".into()))?;
    let partial_sum: f64 = profile.lags.iter().zip(alpha).map(|(&k, a)| k as f64 * a).sum();
    let report = |verdict, model, fitted_parameter| SummabilityReport {
        verdict,
        partial_sum,
        model,
        fitted_parameter,
    };

    let last_positive = alpha.iter().rposition(|&a| a > 0.0);
    match last_positive {
        None => return Ok(report(Summability::Summable, None, None)),
        Some(i) if i + 1 < alpha.len() && alpha.len() - i > 3 => {
            // alpha vanishes identically from some lag on
            return Ok(report(Summability::Summable, None, None));
        }
        _ => {}
    }

    let start = profile.len() / 2;
    let tail: Vec<(f64, f64)> = profile.lags[start..]
        .iter()
        .zip(&alpha[start..])
        .filter(|(_, a)| **a > 0.0)
        .map(|(&k, &a)| (k as f64, a.ln()))
        .collect();
    if tail.len() < 3 {
        return Ok(report(Summability::Inconclusive, None, None));
    }
    let ks: Vec<f64> = tail.iter().map(|t| t.0).collect();
    let logk: Vec<f64> = ks.iter().map(|k| k.ln()).collect();
    let y: Vec<f64> = tail.iter().map(|t| t.1).collect();
    let geo = least_squares(&ks, &y);
    let poly = least_squares(&logk, &y);
    let model = match tail_model {
        TailModel::Auto => match (geo, poly) {
            (Some((_, rg)), Some((_, rp))) => {
                if rg >= rp {
                    TailModel::Geometric
                } else {
                    TailModel::Polynomial
                }
            }
            (Some(_), None) => TailModel::Geometric,
            (None, Some(_)) => TailModel::Polynomial,
            (None, None) => return Ok(report(Summability::Inconclusive, None, None)),
        },
        m => m,
    };
    match model {
        TailModel::Geometric => match geo {
            None => Ok(report(Summability::Inconclusive, Some(model), None)),
            Some((slope, _)) => {
                let ratio = slope.exp();
                let verdict = if ratio < 1.0 {
                    Summability::Summable
                } else {
                    Summability::NotSummable
                };
                Ok(report(verdict, Some(model), Some(ratio)))
            }
        },
        _ => match poly {
            None => Ok(report(Summability::Inconclusive, Some(TailModel::Polynomial), None)),
            Some((slope, _)) => {
                let p = -slope;
                let verdict = if p > 2.0 + 1e-9 {
                    Summability::Summable
                } else {
                    Summability::NotSummable
                };
                Ok(report(verdict, Some(TailModel::Polynomial), Some(p)))
            }
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn profile_from(eta: impl Fn(f64) -> f64, alpha: impl Fn(f64) -> f64, k_max: usize) -> DependenceProfile {
        let lags: Vec<usize> = (1..=k_max).collect();
        let e = lags.iter().map(|&k| eta(k as f64)).collect();
        let a: Vec<f64> = lags.iter().map(|&k| alpha(k as f64)).collect();
        DependenceProfile::from_values(lags, e, vec![0.0; k_max], Some(a)).unwrap()
    }

    #[test]
    fn eta_decay_examples() {
        let zero = profile_from(|_| 0.0, |_| 0.0, 30);
        assert!(check_eta_decay_condition(&zero, SlowlyVarying::Log).pass);

        let inv_sq = profile_from(|k| 1.0 / (k * k), |_| 0.0, 30);
        let v = check_eta_decay_condition(&inv_sq, SlowlyVarying::Log);
        assert!(!v.pass);
        assert_eq!(v.first_violation, Some(1));
    }

    #[test]
    fn geometric_eta_fails_early_and_recovers() {
        // 0.4^k is below 1/(k^4 log(k + e)) at k = 1 but not at k = 2
        let p = profile_from(|k| 0.4f64.powf(k), |_| 0.0, 30);
        let v = check_eta_decay_condition(&p, SlowlyVarying::Log);
        assert!(v.pass_per_lag[0]);
        assert_eq!(v.first_violation, Some(2));
        let last = v.last_violation.unwrap();
        assert!(last < 30);
        assert!(v.pass_per_lag[last..].iter().all(|&x| x));
    }

    #[test]
    fn slowly_varying_values() {
        assert!((SlowlyVarying::Log.eval(1.0) - (1.0 + E).ln()).abs() < 1e-15);
        assert!((SlowlyVarying::Log.eval(1.0) - 1.313_261_687).abs() < 1e-9);
        assert_eq!(SlowlyVarying::Ramp.eval(5.0), 1.0);
        assert!(SlowlyVarying::by_name("loglog").is_err());
    }

    #[test]
    fn summability_examples() {
        let zero = profile_from(|_| 0.0, |_| 0.0, 30);
        let r = check_alpha_summability(&zero, TailModel::Auto).unwrap();
        assert_eq!((r.verdict, r.partial_sum), (Summability::Summable, 0.0));

        let geo = profile_from(|_| 0.0, |k| 0.4f64.powf(k), 30);
        let r = check_alpha_summability(&geo, TailModel::Auto).unwrap();
        assert_eq!(r.verdict, Summability::Summable);
        assert!((r.partial_sum - 0.4 / 0.36).abs() < 1e-4);
        assert!((r.fitted_parameter.unwrap() - 0.4).abs() < 1e-12);

        let harmonic = profile_from(|_| 0.0, |k| 1.0 / (k * k), 30);
        let r = check_alpha_summability(&harmonic, TailModel::Auto).unwrap();
        assert_eq!(r.verdict, Summability::NotSummable);
        assert_eq!(r.model, Some(TailModel::Polynomial));

        let cubic = profile_from(|_| 0.0, |k| k.powi(-3), 30);
        let r = check_alpha_summability(&cubic, TailModel::Polynomial).unwrap();
        assert_eq!(r.verdict, Summability::Summable);
    }

    #[test]
    fn summability_degenerate_cases() {
        let short = profile_from(|_| 0.0, |k| 0.5f64.powf(k), 4);
        let r = check_alpha_summability(&short, TailModel::Auto).unwrap();
        assert_eq!(r.verdict, Summability::Inconclusive);
        let mut no_alpha = short.clone();
        no_alpha.alpha = None;
        assert!(check_alpha_summability(&no_alpha, TailModel::Auto).is_err());
    }
}
