use serde::{Deserialize, Serialize};

use super::ode::{no_guard, Dopri5, Tolerances};
use super::{check_grid, ode_failure, DynamicsError, StiffnessProfile};

/// A point `(q, p)` of the classical phase space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassicalState {
    pub q: f64,
    pub p: f64,
}

impl ClassicalState {
    pub fn new(q: f64, p: f64) -> Self {
        ClassicalState { q, p }
    }
}

/// Trajectory of `q̇ = p, ṗ = -k(t) q` starting at `times[0]`, sampled on `times`.
pub fn solve_hill(
    profile: &StiffnessProfile,
    initial: ClassicalState,
    times: &[f64],
) -> Result<Vec<ClassicalState>, DynamicsError> {
    solve_hill_with(profile, initial, times, Tolerances::default())
}

pub fn solve_hill_with(
    profile: &StiffnessProfile,
    initial: ClassicalState,
    times: &[f64],
    tol: Tolerances,
) -> Result<Vec<ClassicalState>, DynamicsError> {
    check_grid(times)?;
    if !initial.q.is_finite() || !initial.p.is_finite() {
        return Err(DynamicsError::InvalidArgument("initial state must be finite".into()));
    }
    profile.check_span(times[0], times[times.len() - 1])?;
    let ys = Dopri5::new(tol)
        .integrate(
            |t, y: &[f64; 2]| [y[1], -profile.eval_unchecked(t) * y[0]],
            times[0],
            [initial.q, initial.p],
            times,
            no_guard,
        )
        .map_err(ode_failure)?;
    Ok(ys.into_iter().map(|y| ClassicalState::new(y[0], y[1])).collect())
}

/// The 2x2 flow map `[[∂q/∂q0, ∂q/∂p0], [∂p/∂q0, ∂p/∂p0]]` from `t0` to `t1`.
///
/// The flow is linear, so this matrix carries every trajectory; `t1 < t0`
/// gives the backward map.
pub fn transfer_matrix(
    profile: &StiffnessProfile,
    t0: f64,
    t1: f64,
    tol: Tolerances,
) -> Result<[[f64; 2]; 2], DynamicsError> {
    profile.check_span(t0, t1)?;
    if t0 == t1 {
        return Ok([[1.0, 0.0], [0.0, 1.0]]);
    }
    let ys = Dopri5::new(tol)
        .integrate(
            |t, y: &[f64; 4]| {
                let k = profile.eval_unchecked(t);
                [y[1], -k * y[0], y[3], -k * y[2]]
            },
            t0,
            [1.0, 0.0, 0.0, 1.0],
            &[t1],
            no_guard,
        )
        .map_err(ode_failure)?;
    let y = ys[0];
    Ok([[y[0], y[2]], [y[1], y[3]]])
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn unit_oscillator_half_period() {
        let p = StiffnessProfile::constant(1.0);
        let s = solve_hill(&p, ClassicalState::new(1.0, 0.0), &[0.0, PI]).unwrap();
        assert!((s[1].q + 1.0).abs() < 1e-9);
        assert!(s[1].p.abs() < 1e-9);
    }

    #[test]
    fn free_streaming() {
        let p = StiffnessProfile::constant(0.0);
        let s = solve_hill(&p, ClassicalState::new(0.0, 1.0), &[0.0, 2.0]).unwrap();
        assert!((s[1].q - 2.0).abs() < 1e-12);
        assert!((s[1].p - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_grid() {
        let p = StiffnessProfile::constant(1.0);
        assert_eq!(
            solve_hill(&p, ClassicalState::new(1.0, 0.0), &[0.0, 1.0, 1.0]).unwrap_err(),
            DynamicsError::InvalidGrid
        );
    }

    #[test]
    fn table_span_checked() {
        let p = StiffnessProfile::table(vec![(0.0, 1.0), (1.0, 2.0)]).unwrap();
        assert!(matches!(
            solve_hill(&p, ClassicalState::new(1.0, 0.0), &[0.0, 2.0]),
            Err(DynamicsError::Domain { .. })
        ));
    }

    #[test]
    fn blow_up_reports_last_good_time() {
        // k(t) = -t^8 grows the solution super-exponentially.
        let p = StiffnessProfile::polynomial(vec![0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, -1.0]);
        let err = solve_hill(&p, ClassicalState::new(1.0, 0.0), &[0.0, 1e3]).unwrap_err();
        assert!(matches!(err, DynamicsError::IntegrationFailure { last_good_t, .. } if last_good_t > 0.0), "{err}");
    }

    #[test]
    fn transfer_matrix_is_symplectic() {
        let p = StiffnessProfile::mathieu(1.0, 0.5, 2.0);
        let m = transfer_matrix(&p, 0.0, 7.0, Tolerances::default()).unwrap();
        let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
        assert!((det - 1.0).abs() < 1e-9, "det={det}");
        let back = transfer_matrix(&p, 7.0, 0.0, Tolerances::default()).unwrap();
        // back * m = identity
        let prod00 = back[0][0] * m[0][0] + back[0][1] * m[1][0];
        let prod01 = back[0][0] * m[0][1] + back[0][1] * m[1][1];
        assert!((prod00 - 1.0).abs() < 1e-9 && prod01.abs() < 1e-9);
    }
}
