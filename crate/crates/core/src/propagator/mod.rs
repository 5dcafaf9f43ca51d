//! Split-step spectral evolution of KvN wavefunctions on a periodic
//! phase-space grid, and the exact characteristics oracle.

mod characteristics;
mod field;
mod grid;
pub mod spectral;
mod stepper;

pub use characteristics::{
    interpolate_bicubic, solve_characteristics, solve_characteristics_with, CharacteristicsMode, InitialCondition,
};
pub use field::{initialize_gaussian, Gaussian, Moments, PhaseSpaceField, DEFAULT_BOUNDARY_THRESHOLD, GAUSSIAN_EDGE_RATIO};
pub use grid::{frequencies, PhaseSpaceGrid};
pub use stepper::{propagate, step_count, step_strang, Propagation, SplitStepper};

use thiserror::Error;

use crate::dynamics::DynamicsError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PropagatorError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("edge density ratio {fraction:e} too large; try extents lx >= {suggested_lx}, lp >= {suggested_lp}")]
    BoundaryMass { fraction: f64, suggested_lx: f64, suggested_lp: f64 },
    #[error("fields live on different grids")]
    GridMismatch,
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error("characteristic through node {index} failed: {source}")]
    NodeFailure { index: usize, source: DynamicsError },
    #[error("observer failed at t = {t}: {message}")]
    Observer { t: f64, message: String },
}
