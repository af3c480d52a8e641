use thiserror::Error;

use crate::numerics::QuadratureResult;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error(
        "quadrature did not reach tolerance {tolerance:e}: error estimate {:e} after {} evaluations",
        partial.abs_error_estimate,
        partial.evaluations
    )]
    QuadratureCap { partial: QuadratureResult, tolerance: f64 },

    #[error("invalid chain: {0}")]
    InvalidChain(String),

    #[error("chain is not reversible: max detailed-balance violation {max_violation:e}")]
    NotReversible { max_violation: f64 },

    #[error("chain is reducible: stationary law is not unique")]
    Reducible,

    #[error("eigensolver failed: {0}")]
    Eigen(String),

    #[error("function is not centered under the stationary law: mean {mean:e}")]
    NotCentered { mean: f64 },

    #[error("metropolis target vanishes at the initial state {0}")]
    TargetVanishes(f64),

    #[error("kernel does not satisfy C3 (differentiable with bounded derivative): {0}")]
    KernelNotSmooth(String),

    #[error("bandwidth regime violated: {0}")]
    Regime(String),

    #[error("no replicates")]
    NoReplicates,

    #[error("insufficient replicates: {got} < {min}")]
    InsufficientReplicates { got: usize, min: usize },

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
