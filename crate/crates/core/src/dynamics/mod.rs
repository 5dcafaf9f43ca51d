//! Stiffness profiles, classical trajectories of `q̈ + k(t) q = 0` and the
//! auxiliary Ermakov equation `ρ̈ + k(t) ρ = ρ⁻³`.

mod ermakov;
mod hill;
pub mod ode;
mod profile;

pub use ermakov::{
    ermakov_residual, solve_ermakov_direct, solve_ermakov_direct_with, solve_ermakov_pinney, solve_ermakov_pinney_with,
    ErmakovOptions, ErmakovSolution, DEFAULT_RHO_MIN,
};
pub use hill::{solve_hill, solve_hill_with, transfer_matrix, ClassicalState};
pub use ode::{Dopri5, Tolerances};
pub use profile::StiffnessProfile;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DynamicsError {
    #[error("t = {t} outside the profile domain [{lo}, {hi}]")]
    Domain { t: f64, lo: f64, hi: f64 },
    #[error("invalid stiffness profile: {0}")]
    InvalidProfile(String),
    #[error("time grid must be strictly increasing and non-empty")]
    InvalidGrid,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("integration failed after t = {last_good_t}: {reason}")]
    IntegrationFailure { last_good_t: f64, reason: String },
    #[error("rho fell below the floor {rho_min} near t = {t_cross}")]
    Singularity { t_cross: f64, rho_min: f64 },
    #[error("degenerate Wronskian {wronskian:e} in Pinney construction")]
    DegenerateWronskian { wronskian: f64 },
}

pub(crate) fn check_grid(times: &[f64]) -> Result<(), DynamicsError> {
    if times.is_empty() || times.iter().any(|t| !t.is_finite()) || times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(DynamicsError::InvalidGrid);
    }
    Ok(())
}

pub(crate) fn ode_failure<E: std::fmt::Debug>(f: ode::OdeFailure<E>) -> DynamicsError {
    use ode::OdeFailure::*;
    match f {
        StepUnderflow { t } => DynamicsError::IntegrationFailure { last_good_t: t, reason: "step size underflow".into() },
        TooManySteps { t } => DynamicsError::IntegrationFailure { last_good_t: t, reason: "step budget exhausted".into() },
        NonFinite { t } => DynamicsError::IntegrationFailure { last_good_t: t, reason: "non-finite state".into() },
        Guard(e) => DynamicsError::IntegrationFailure { last_good_t: f64::NAN, reason: format!("{e:?}") },
    }
}
