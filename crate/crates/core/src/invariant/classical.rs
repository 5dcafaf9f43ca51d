use serde::{Deserialize, Serialize};

use super::InvariantError;
use crate::dynamics::{solve_hill_with, ClassicalState, ErmakovSolution, StiffnessProfile};

/// `½[(q/ρ)² + (ρp - ρ̇q)²]`.
pub fn classical_invariant(state: ClassicalState, rho: f64, rhodot: f64) -> Result<f64, InvariantError> {
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(InvariantError::NonPositiveRho(rho));
    }
    let a = state.q / rho;
    let b = rho * state.p - rhodot * state.q;
    Ok(0.5 * (a * a + b * b))
}

/// Drift of the classical invariant along one trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryDrift {
    pub initial: ClassicalState,
    pub invariant0: f64,
    /// `max |I(t) - I(0)| / I(0)`, or the absolute drift when `I(0) = 0`.
    pub drift: f64,
    pub relative: bool,
}

/// Integrates every state on the Ermakov solution's time grid and measures
/// how far the invariant strays from its initial value.
pub fn classical_drift(
    profile: &StiffnessProfile,
    states: &[ClassicalState],
    ermakov: &ErmakovSolution,
) -> Result<Vec<TrajectoryDrift>, InvariantError> {
    let times = ermakov.times();
    let tol = ermakov.options().tol;
    states
        .iter()
        .map(|&s| {
            let path = solve_hill_with(profile, s, times, tol)?;
            let values: Vec<f64> = path
                .iter()
                .zip(ermakov.rho().iter().zip(ermakov.rhodot()))
                .map(|(z, (r, rd))| classical_invariant(*z, *r, *rd))
                .collect::<Result<_, _>>()?;
            let i0 = values[0];
            let abs = values.iter().map(|v| (v - i0).abs()).fold(0.0, f64::max);
            let relative = i0 > 0.0;
            Ok(TrajectoryDrift { initial: s, invariant0: i0, drift: if relative { abs / i0 } else { abs }, relative })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn direct_values() {
        assert_eq!(classical_invariant(ClassicalState::new(1.0, 0.0), 1.0, 0.0).unwrap(), 0.5);
        assert_eq!(classical_invariant(ClassicalState::new(1.0, 1.0), 2.0, 0.5).unwrap(), 1.25);
        assert!(classical_invariant(ClassicalState::new(1.0, 1.0), 0.0, 0.5).is_err());
    }

    #[test]
    fn rotating_state_keeps_its_value() {
        for t in [0.0, 0.3, 1.7, 4.0] {
            let v = classical_invariant(ClassicalState::new(f64::cos(t), -f64::sin(t)), 1.0, 0.0).unwrap();
            assert!((v - 0.5).abs() < 1e-15);
        }
    }
}
