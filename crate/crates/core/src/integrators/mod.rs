//! Exponential Rosenbrock schemes (`rb_euler`, `exprb42`, `pexprb43`,
//! `exprb53`) and the exponential multistep scheme `epi3`, all driven by the
//! φ-function engine on the dynamically linearized system.

mod integrate;
mod problem;
mod schemes;
mod steps;

pub use integrate::{integrate, step_count, IntegrationFailure, RecordPolicy, StepRecord, Stepper, Trajectory};
pub use problem::{finite_difference_jacobian, LinearProblem, Linearization, OdeProblem};
pub use schemes::{verify_order_conditions, Scheme, SchemeDefinition, WeightTerm};
pub use steps::{step_epi3, step_exprb42, step_exprb53, step_pexprb43, step_rb_euler, EngineContext};

use crate::phipm::EngineError;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum IntegratorError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("non-finite {0}")]
    NonFinite(String),
    #[error("multistep history missing")]
    MissingHistory,
    #[error("invalid step: {0}")]
    InvalidStep(String),
    #[error(transparent)]
    Engine(#[from] EngineError),
}
