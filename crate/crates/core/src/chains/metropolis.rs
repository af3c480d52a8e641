use std::fmt;
use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::numerics::RngStream;
use crate::{Error, Result};

pub const DEFAULT_BURN_IN: u64 = 10_000;

type Density = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Random-walk Metropolis chain. Reversible with respect to its target by
/// construction; stationarity is only approximate (burn-in from `init`).
#[derive(Clone)]
pub struct MetropolisChain {
    target_name: String,
    target: Density,
    proposal_sd: f64,
    burn_in: u64,
    init: f64,
}

impl fmt::Debug for MetropolisChain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MetropolisChain")
            .field("target", &self.target_name)
            .field("proposal_sd", &self.proposal_sd)
            .field("burn_in", &self.burn_in)
            .field("init", &self.init)
            .finish()
    }
}

impl MetropolisChain {
    /// Chain with an arbitrary unnormalized target.
    pub fn new<F>(target_name: &str, target: F, proposal_sd: f64, burn_in: u64, init: f64) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        if !(proposal_sd > 0.0) || !proposal_sd.is_finite() {
            return Err(Error::InvalidChain(format!(
                "proposal_sd must be positive, got {proposal_sd}"
            )));
        }
        let t0 = target(init);
        if !(t0 > 0.0) || !t0.is_finite() {
            return Err(Error::TargetVanishes(init));
        }
        Ok(Self {
            target_name: target_name.to_string(),
            target: Arc::new(target),
            proposal_sd,
            burn_in,
            init,
        })
    }

    /// Standard-normal target started at its mode.
    pub fn std_normal(proposal_sd: f64, burn_in: u64) -> Result<Self> {
        Self::new("std_normal", |x| (-0.5 * x * x).exp(), proposal_sd, burn_in, 0.0)
    }

    pub fn by_target_name(name: &str, proposal_sd: f64, burn_in: u64) -> Result<Self> {
        match name {
            "std_normal" => Self::std_normal(proposal_sd, burn_in),
            other => Err(Error::Config(format!(
                "unknown metropolis target {other:?} (expected std_normal)"
            ))),
        }
    }

    pub fn target_name(&self) -> &str {
        &self.target_name
    }

    pub fn proposal_sd(&self) -> f64 {
        self.proposal_sd
    }

    pub fn burn_in(&self) -> u64 {
        self.burn_in
    }

    pub fn target_density(&self, x: f64) -> f64 {
        (self.target)(x)
    }

    /// `min(1, pi(y) / pi(x))`.
    pub fn acceptance_probability(&self, x: f64, y: f64) -> f64 {
        let tx = self.target_density(x);
        let ty = self.target_density(y);
        if tx <= 0.0 {
            return 1.0;
        }
        (ty / tx).clamp(0.0, 1.0)
    }

    pub(crate) fn simulate(&self, n: usize, stream: RngStream) -> Result<Vec<f64>> {
        let mut rng = stream.rng();
        let mut x = self.init;
        let mut tx = self.target_density(x);
        if !(tx > 0.0) {
            return Err(Error::TargetVanishes(x));
        }
        let step = |x: &mut f64, tx: &mut f64, rng: &mut rand_chacha::ChaCha8Rng| {
            let z: f64 = rng.sample(StandardNormal);
            let y = *x + self.proposal_sd * z;
            let ty = self.target_density(y);
            let u: f64 = rng.random();
            if u * *tx < ty {
                *x = y;
                *tx = ty;
            }
        };
        for _ in 0..self.burn_in {
            step(&mut x, &mut tx, &mut rng);
        }
        let mut out = Vec::with_capacity(n);
        out.push(x);
        for _ in 1..n {
            step(&mut x, &mut tx, &mut rng);
            out.push(x);
        }
        Ok(out)
    }
}
