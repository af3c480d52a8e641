//! Verification of the covariance relations, the limit-theorem conditions
//! and Monte Carlo normality of the studentized estimator.

mod conditions;
mod experiment;
mod lemma;
mod normality;

pub use conditions::{
    check_clt_conditions, gaussian_pair_moment, quadrature_pair_moment, CltConditionReport, ConditionSweep,
    KernelTransform, CORRELATION_FLOOR,
};
pub use experiment::{
    covariance_to_correlation, exact_studentized_covariance, run_clt_experiment, CltConfig, CltReport, CltRun,
    INVALID_WARNING_FRACTION,
};
pub use lemma::{
    run_lemma_suite, spectral_consistency, suite_cases, verify_lemma_cov, verify_lemma_cov_labeled, LemmaReport,
    LemmaSuiteConfig, LemmaSuiteReport, Relation, RelationResult, Witness, EQUALITY_TOL, INEQUALITY_SLACK,
};
pub use normality::{
    summarize_normality, CoordinateSummary, NormalityDiagnostics, NormalityThresholds, PassFlags, MIN_REPLICATES,
};
