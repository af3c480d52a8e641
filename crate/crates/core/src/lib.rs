//! Kernel density estimation for stationary reversible Markov chains.
//!
//! The crate bundles the Rosenblatt estimator together with the machinery
//! needed to check it against exact oracles:
//!
//! * [`kernels`]: Condition-C kernels (symmetric, nonincreasing on the
//!   half line, light tails, bounded derivative) and a numerical checker.
//! * [`numerics`]: normal and bivariate-normal distribution functions,
//!   adaptive quadrature in one and two dimensions, the KS statistic and
//!   the seeded random streams used by every simulation.
//! * [`chains`]: finite reversible chains with exact spectral analysis,
//!   the unit-variance Gaussian AR(1) chain and a random-walk Metropolis
//!   chain.
//! * [`dependence`]: the joint survival discrepancy `H_k`, its L1 norm
//!   `eta_k`, the pairwise mixing coefficients and the decay checks.
//! * [`estimator`]: the kernel estimator, its exact expectation, the
//!   second-order bias term and the self-normalized statistic.
//! * [`clt_harness`]: covariance inequalities for reversible chains,
//!   triangular-array CLT conditions for the kernel transform and the
//!   Monte Carlo normality experiment.
//! * [`cli`]: the batch front-end behind the `revkde` binary.

#![allow(
    clippy::neg_cmp_op_on_partial_ord,
    clippy::needless_range_loop,
    clippy::excessive_precision
)]

pub mod chains;
pub mod cli;
pub mod clt_harness;
pub mod dependence;
pub mod error;
pub mod estimator;
pub mod kernels;
pub mod numerics;

pub use error::{Error, Result};
