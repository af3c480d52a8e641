use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::chains::ChainSpec;
use crate::clt_harness::NormalityThresholds;
use crate::estimator::{BandwidthSchedule, CenteringMode, RegimeMode};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Subcommand {
    Simulate,
    Kde,
    Dependence,
    Clt,
    LemmaCheck,
}

impl Subcommand {
    pub fn name(&self) -> &'static str {
        match self {
            Subcommand::Simulate => "simulate",
            Subcommand::Kde => "kde",
            Subcommand::Dependence => "dependence",
            Subcommand::Clt => "clt",
            Subcommand::LemmaCheck => "lemma-check",
        }
    }
}

/// Options of the random-chain covariance suite.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LemmaOptions {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub chains: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub states_min: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub states_max: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub functions_per_chain: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_lag: Option<usize>,
}

/// Contents of a config file. Every field is optional here; each subcommand
/// states what it requires. Command-line flags override file values.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub subcommand: Option<Subcommand>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub chain: Option<ChainSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kernel: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub schedule: Option<BandwidthSchedule>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mode: Option<RegimeMode>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub points: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_grid: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub replicates: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub centering: Option<CenteringMode>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lags: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub slowly_varying: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub thresholds: Option<NormalityThresholds>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lemma: Option<LemmaOptions>,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string().trim().replace('\n', " ")))
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    /// Fill every field unset here from `other`.
    pub fn or(self, other: ExperimentConfig) -> ExperimentConfig {
        let lemma = match (self.lemma, other.lemma) {
            (Some(a), Some(b)) => Some(LemmaOptions {
                chains: a.chains.or(b.chains),
                states_min: a.states_min.or(b.states_min),
                states_max: a.states_max.or(b.states_max),
                functions_per_chain: a.functions_per_chain.or(b.functions_per_chain),
                max_lag: a.max_lag.or(b.max_lag),
            }),
            (a, b) => a.or(b),
        };
        ExperimentConfig {
            subcommand: self.subcommand.or(other.subcommand),
            chain: self.chain.or(other.chain),
            kernel: self.kernel.or(other.kernel),
            schedule: self.schedule.or(other.schedule),
            mode: self.mode.or(other.mode),
            points: self.points.or(other.points),
            n: self.n.or(other.n),
            n_grid: self.n_grid.or(other.n_grid),
            replicates: self.replicates.or(other.replicates),
            centering: self.centering.or(other.centering),
            lags: self.lags.or(other.lags),
            slowly_varying: self.slowly_varying.or(other.slowly_varying),
            seed: self.seed.or(other.seed),
            output_dir: self.output_dir.or(other.output_dir),
            thresholds: self.thresholds.or(other.thresholds),
            lemma,
        }
    }

    /// Canonical JSON echo: sorted keys, unset fields omitted.
    pub fn echo(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("config serializes")
    }
}

pub(crate) fn require<T: Clone>(value: &Option<T>, field: &str, sub: Subcommand) -> Result<T> {
    value
        .clone()
        .ok_or_else(|| Error::Config(format!("missing field `{field}` (required by {})", sub.name())))
}

/// `"a..b"` (inclusive) or a single number `b`, read as `1..b` when
/// `default_lo` is 1.
pub fn parse_range(s: &str, default_lo: usize) -> Result<(usize, usize)> {
    let bad = || Error::Config(format!("range {s:?}: expected <lo>..<hi> or <hi>"));
    let s = s.trim();
    let (lo, hi) = match s.split_once("..") {
        Some((a, b)) => (
            a.trim().parse().map_err(|_| bad())?,
            b.trim().trim_start_matches('=').parse().map_err(|_| bad())?,
        ),
        None => (default_lo, s.parse().map_err(|_| bad())?),
    };
    if lo > hi {
        return Err(bad());
    }
    Ok((lo, hi))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_keys_rejected() {
        let e = ExperimentConfig::from_toml("seed = 1\nbogus = 2\n").unwrap_err();
        assert!(e.to_string().contains("bogus"), "{e}");
        let e = ExperimentConfig::from_toml("[schedule]\nc = 1.0\nbeta = 0.2\ngamma = 1\n").unwrap_err();
        assert!(e.to_string().contains("gamma"), "{e}");
    }

    #[test]
    fn full_config_parses() {
        let c = ExperimentConfig::from_toml(
            r#"
subcommand = "clt"
seed = 7
points = [-1.0, 0.0, 1.0]
n = 20000
replicates = 1000
centering = "exact_expectation"
[chain]
kind = "ar1"
rho = 0.5
[schedule]
c = 1.0
beta = 0.22
"#,
        )
        .unwrap();
        assert_eq!(c.subcommand, Some(Subcommand::Clt));
        assert_eq!(c.chain, Some(ChainSpec::Ar1 { rho: 0.5 }));
    }

    #[test]
    fn override_order() {
        let flags = ExperimentConfig {
            seed: Some(9),
            ..Default::default()
        };
        let file = ExperimentConfig {
            seed: Some(1),
            n: Some(10),
            ..Default::default()
        };
        let c = flags.or(file);
        assert_eq!((c.seed, c.n), (Some(9), Some(10)));
    }

    #[test]
    fn ranges() {
        assert_eq!(parse_range("2..12", 1).unwrap(), (2, 12));
        assert_eq!(parse_range("20", 1).unwrap(), (1, 20));
        assert!(parse_range("5..2", 1).is_err());
    }
}
