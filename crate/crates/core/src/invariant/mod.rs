//! The Ermakov-Lewis invariant, classically and as a KvN operator acting on
//! sampled wavefunctions.

mod classical;
mod operator;
mod poly_eval;
mod study;

pub use classical::{classical_drift, classical_invariant, TrajectoryDrift};
pub use operator::{
    build_split_operator, expectation_invariant, parseval_self_test, variance_invariant, InvariantEvaluator,
    InvariantOperatorSplit,
};
pub use poly_eval::{polynomial_expectation, to_liouville};
pub use study::{run_invariant_study, InvariantReport, RhoSource, StudyConfig, VARIANCE_FLOOR};

use thiserror::Error;

use crate::dynamics::DynamicsError;
use crate::propagator::PropagatorError;
use crate::weyl::WeylError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum InvariantError {
    #[error("rho must be positive, got {0}")]
    NonPositiveRho(f64),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("operator and field live on different grids")]
    GridMismatch,
    #[error("Parseval self-test failed: relative mismatch {0:e}")]
    Parseval(f64),
    #[error("{stage} stage failed: {message}")]
    Stage { stage: &'static str, message: String },
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Propagator(#[from] PropagatorError),
    #[error(transparent)]
    Weyl(#[from] WeylError),
}
