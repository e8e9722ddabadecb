//! Rotating shallow-water model in Cartesian operator form on a doubly
//! periodic f-plane grid.
//!
//! State layout is `[u_x; u_y; u_z; h]`, each block one value per cell.

mod check;
mod diagnostics;
mod model;
mod operators;
mod scenario;

pub use check::{directional_error, jacobian_fd_check, smooth_random_state, JacobianReport};
pub use diagnostics::{diagnostics, ConservationMonitor, Diagnostics, Drift};
pub use model::{absolute_vorticity, split_state, JacobianBlocks, ShallowWater};
pub use operators::{
    default_dissipation_coefficient, dissipation_coefficient, planar_periodic_operators, sphere_mean_spacing,
    DiscreteOperators, DEFAULT_CORIOLIS, DEFAULT_GRAVITY,
};
pub use scenario::{Scenario, SCENARIO_KEYS};

use crate::config::ConfigError;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SweError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("non-finite {variable} tendency in cell {cell}")]
    NonFinite { variable: &'static str, cell: usize },
    #[error("non-positive depth {value} in cell {cell}")]
    NonPositiveDepth { cell: usize, value: f64 },
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error(transparent)]
    Config(#[from] ConfigError),
}
