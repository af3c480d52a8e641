//! Reversible Markov chains: finite oracle chains with exact spectral
//! analysis, the Gaussian AR(1), and a random-walk Metropolis sampler.

mod ar1;
mod finite;
mod metropolis;
mod spectral;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

pub use ar1::{lag2_joint_density, local_joint_density_bound, Ar1Chain};
pub use finite::{
    build_finite_chain, center, conditional_expectation, direct_lag_covariance, random_reversible_chain,
    FiniteReversibleChain,
};
pub use metropolis::{MetropolisChain, DEFAULT_BURN_IN};
pub use spectral::{exact_lag_covariance, spectral_decompose, SpectralDecomposition};

use crate::numerics::{normal_pdf, RngStream};
use crate::{Error, Result};

/// Chain description as it appears in config files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum ChainSpec {
    Finite {
        values: Vec<f64>,
        transition: Vec<Vec<f64>>,
    },
    Ar1 {
        rho: f64,
    },
    Metropolis {
        target: String,
        proposal_sd: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        burn_in: Option<u64>,
    },
}

impl ChainSpec {
    pub fn build(&self) -> Result<Chain> {
        match self {
            ChainSpec::Finite { values, transition } => {
                Ok(Chain::Finite(build_finite_chain(values.clone(), transition.clone())?))
            }
            ChainSpec::Ar1 { rho } => Ok(Chain::Ar1(Ar1Chain::new(*rho)?)),
            ChainSpec::Metropolis {
                target,
                proposal_sd,
                burn_in,
            } => Ok(Chain::Metropolis(MetropolisChain::by_target_name(
                target,
                *proposal_sd,
                burn_in.unwrap_or(DEFAULT_BURN_IN),
            )?)),
        }
    }

    /// Parse `ar1:<rho>`, `metropolis:<sd>` or an inline JSON object.
    pub fn parse_inline(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.starts_with('{') {
            return serde_json::from_str(s).map_err(|e| Error::Config(format!("chain spec: {e}")));
        }
        let (kind, arg) = s
            .split_once(':')
            .ok_or_else(|| Error::Config(format!("chain spec {s:?}: expected kind:arg or a JSON object")))?;
        let num: f64 = arg
            .parse()
            .map_err(|_| Error::Config(format!("chain spec {s:?}: {arg:?} is not a number")))?;
        match kind {
            "ar1" => Ok(ChainSpec::Ar1 { rho: num }),
            "metropolis" => Ok(ChainSpec::Metropolis {
                target: "std_normal".into(),
                proposal_sd: num,
                burn_in: None,
            }),
            other => Err(Error::Config(format!("chain spec: unknown kind {other:?}"))),
        }
    }
}

/// A validated chain.
#[derive(Debug, Clone)]
pub enum Chain {
    Finite(FiniteReversibleChain),
    Ar1(Ar1Chain),
    Metropolis(MetropolisChain),
}

impl Chain {
    pub fn marginal(&self) -> Marginal {
        match self {
            Chain::Finite(c) => Marginal::Discrete {
                values: c.values().to_vec(),
                probs: c.stationary().to_vec(),
            },
            Chain::Ar1(_) | Chain::Metropolis(_) => Marginal::StdNormal,
        }
    }

    pub fn describe(&self) -> String {
        match self {
            Chain::Finite(c) => format!("finite({} states)", c.n_states()),
            Chain::Ar1(c) => format!("ar1(rho={})", c.rho()),
            Chain::Metropolis(m) => format!("metropolis({}, sd={})", m.target_name(), m.proposal_sd()),
        }
    }
}

/// Stationary marginal law.
#[derive(Debug, Clone, PartialEq)]
pub enum Marginal {
    StdNormal,
    Uniform { lo: f64, hi: f64 },
    Discrete { values: Vec<f64>, probs: Vec<f64> },
}

impl Marginal {
    /// Lebesgue density, if there is one.
    pub fn density(&self, x: f64) -> Option<f64> {
        match self {
            Marginal::StdNormal => Some(normal_pdf(x)),
            Marginal::Uniform { lo, hi } => Some(if x >= *lo && x <= *hi { 1.0 / (hi - lo) } else { 0.0 }),
            Marginal::Discrete { .. } => None,
        }
    }

    /// Density used to normalize kernel statistics; a discrete law has none,
    /// so unit reference density is used.
    pub fn reference_density(&self, x: f64) -> f64 {
        self.density(x).unwrap_or(1.0)
    }

    pub fn density_second_derivative(&self, x: f64) -> Option<f64> {
        match self {
            Marginal::StdNormal => Some((x * x - 1.0) * normal_pdf(x)),
            Marginal::Uniform { lo, hi } => (x > *lo && x < *hi).then_some(0.0),
            Marginal::Discrete { .. } => None,
        }
    }
}

/// Stationary path `X_1, ..., X_n`: finite chains start from `pi` by inverse
/// CDF, the AR(1) from `N(0, 1)`, Metropolis after its burn-in.
pub fn simulate_path(chain: &Chain, n: usize, stream: RngStream) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::Domain("path length must be at least 1".into()));
    }
    match chain {
        Chain::Finite(c) => Ok(simulate_finite(c, n, stream)),
        Chain::Ar1(c) => Ok(simulate_ar1(c, n, stream)),
        Chain::Metropolis(m) => m.simulate(n, stream),
    }
}

fn inverse_cdf(cum: &[f64], u: f64) -> usize {
    cum.partition_point(|&c| c <= u).min(cum.len() - 1)
}

fn cumulative(p: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut acc = 0.0;
    p.map(|x| {
        acc += x;
        acc
    })
    .collect()
}

fn simulate_finite(chain: &FiniteReversibleChain, n: usize, stream: RngStream) -> Vec<f64> {
    let s = chain.n_states();
    let start = cumulative(chain.stationary().iter().copied());
    let rows: Vec<Vec<f64>> = (0..s)
        .map(|i| cumulative(chain.transition().row(i).iter().copied()))
        .collect();
    let mut rng = stream.rng();
    let mut state = inverse_cdf(&start, rng.random());
    let mut out = Vec::with_capacity(n);
    out.push(chain.values()[state]);
    for _ in 1..n {
        state = inverse_cdf(&rows[state], rng.random());
        out.push(chain.values()[state]);
    }
    out
}

fn simulate_ar1(chain: &Ar1Chain, n: usize, stream: RngStream) -> Vec<f64> {
    let mut rng = stream.rng();
    let rho = chain.rho();
    let sd = chain.innovation_sd();
    let mut x: f64 = rng.sample(StandardNormal);
    let mut out = Vec::with_capacity(n);
    out.push(x);
    for _ in 1..n {
        let e: f64 = rng.sample(StandardNormal);
        x = rho * x + sd * e;
        out.push(x);
    }
    out
}
