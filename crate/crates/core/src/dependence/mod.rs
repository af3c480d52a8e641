//! Dependence coefficients `H_k`, `eta_k`, `alpha-bar_k` and `alpha_k`,
//! the decay and summability checks built on them, and the Newman-Hoeffding
//! covariance identity.

mod coefficients;
mod hoeffding;
mod profile;

pub use coefficients::{
    alpha_bar_coefficient, alpha_coefficient, eta_coefficient, eta_with_error, finite_h_cells, h_k_function, HFunction,
    ETA_TRUNCATION,
};
pub use hoeffding::{hoeffding_covariance_identity, Smooth};
pub use profile::{
    check_alpha_summability, check_eta_decay_condition, empirical_profile, exact_profile, DependenceProfile,
    EtaDecayVerdict, Provenance, SlowlyVarying, Summability, SummabilityReport, TailModel,
};
