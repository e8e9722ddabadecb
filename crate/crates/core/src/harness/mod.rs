//! Convergence, efficiency and verification studies producing CSV tables.

mod checks;
mod config;
mod problems;
mod study;

pub use checks::{
    check_jacobian, check_jacobian_of, check_order_conditions, order_conditions_table, required_conditions, run_single, JacobianCheck,
    OrderConditionRow, RunReport, JACOBIAN_DIRECTIONS, JACOBIAN_FAIL_THRESHOLD, ORDER_CONDITION_TOL,
};
pub use config::{ProblemId, ReferencePolicy, StudyConfig};
pub use problems::{ErrorNorm, Manufactured, Problem, ProblemModel, ReactionDiffusion1d};
pub use study::{
    compare_zero_skip, compute_reference, fit_order, largest_passing_dt, least_squares_slope, make_reference, ratios_to_csv, reference_key,
    rows_to_csv, run_case, run_convergence_study, run_efficiency_study, step_ratios, ConvergenceReport, EfficiencyReport, OrderFit, Reference,
    ResultRow, SkipComparison, StepRatio, CSV_HEADER, REFERENCE_REFINEMENT, REFERENCE_SCHEME, REFERENCE_TOL,
};

use crate::config::ConfigError;
use crate::numkernel::KernelError;
use crate::swe::SweError;

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("invalid study: {0}")]
    Invalid(String),
    #[error(transparent)]
    Swe(#[from] SweError),
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error("reference run failed: {0}")]
    Reference(String),
    #[error("{scheme} at dt = {dt}: {message}")]
    Run { scheme: &'static str, dt: f64, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
