use num_complex::Complex64;

use super::spectral::SpectralPlan;
use super::{PhaseSpaceField, PhaseSpaceGrid, PropagatorError, DEFAULT_BOUNDARY_THRESHOLD};
use crate::dynamics::StiffnessProfile;

/// Strang splitting for `∂ψ/∂t = -p ∂ₓψ + k(t) x ∂ₚψ`.
///
/// One step is half an `x`-advection, a full `p`-advection with `k` at the
/// midpoint, and another half `x`-advection. Consecutive half steps are fused
/// when several steps run back to back.
pub struct SplitStepper {
    plan: SpectralPlan,
    xs: Vec<f64>,
    ps: Vec<f64>,
    kx: Vec<f64>,
    dkp: f64,
    /// `(dt, table)` for the `x`-advection multiplier, `1/Nx` included.
    x_tables: Vec<(f64, Vec<Complex64>)>,
}

/// `e^{iθ}`, `e^{i(s+1)θ}`, … written into `out`, re-anchored every 16 entries.
fn phase_run(out: &mut [Complex64], s0: i64, theta: f64, scale: f64) {
    let w = Complex64::from_polar(1.0, theta);
    for (b, chunk) in out.chunks_mut(16).enumerate() {
        let mut z = Complex64::from_polar(scale, (s0 + 16 * b as i64) as f64 * theta);
        for c in chunk {
            *c = z;
            z *= w;
        }
    }
}

impl SplitStepper {
    pub fn new(grid: PhaseSpaceGrid) -> Self {
        SplitStepper {
            plan: SpectralPlan::new(grid),
            xs: grid.xs(),
            ps: grid.ps(),
            kx: grid.kappa_x(),
            dkp: std::f64::consts::PI / grid.lp(),
            x_tables: Vec::new(),
        }
    }

    pub fn grid(&self) -> &PhaseSpaceGrid {
        self.plan.grid()
    }

    fn x_table(&mut self, dt: f64) -> usize {
        if let Some(pos) = self.x_tables.iter().position(|(d, _)| *d == dt) {
            return pos;
        }
        let nx = self.kx.len();
        let scale = 1.0 / nx as f64;
        let mut table = Vec::with_capacity(nx * self.ps.len());
        for &p in &self.ps {
            table.extend(self.kx.iter().map(|k| Complex64::from_polar(scale, -k * p * dt)));
        }
        if self.x_tables.len() >= 4 {
            self.x_tables.remove(0);
        }
        self.x_tables.push((dt, table));
        self.x_tables.len() - 1
    }

    /// `ψ ← exp(-dt p ∂ₓ) ψ`.
    fn advect_x(&mut self, data: &mut [Complex64], dt: f64) {
        let idx = self.x_table(dt);
        let nx = self.kx.len();
        let table = &self.x_tables[idx].1;
        self.plan.along_x(data, |j, row| {
            for (z, m) in row.iter_mut().zip(&table[j * nx..(j + 1) * nx]) {
                *z *= m;
            }
        });
    }

    /// `ψ ← exp(dt k x ∂ₚ) ψ`.
    fn advect_p(&mut self, data: &mut [Complex64], k_dt: f64) {
        let np = self.ps.len();
        let half = np / 2;
        let scale = 1.0 / np as f64;
        let (xs, dkp) = (&self.xs, self.dkp);
        let mut phases = vec![Complex64::default(); np];
        self.plan.along_p(data, |i, row| {
            let theta = dkp * xs[i] * k_dt;
            phase_run(&mut phases[..half], 0, theta, scale);
            phase_run(&mut phases[half..], -(half as i64), theta, scale);
            for (z, m) in row.iter_mut().zip(&phases) {
                *z *= m;
            }
        });
    }

    /// Advances `field` by `n` steps of size `dt`. `k` is read without a
    /// domain check, so the caller validates the span.
    fn advance_unchecked(&mut self, field: &mut PhaseSpaceField, profile: &StiffnessProfile, n: usize, dt: f64, t0: f64, s0: usize) {
        if n == 0 {
            return;
        }
        let data = field.values_mut();
        self.advect_x(data, 0.5 * dt);
        for s in 0..n {
            let tm = t0 + ((s0 + s) as f64 + 0.5) * dt;
            self.advect_p(data, profile.eval_unchecked(tm) * dt);
            self.advect_x(data, if s + 1 == n { 0.5 * dt } else { dt });
        }
        field.set_time(t0 + (s0 + n) as f64 * dt);
    }

    /// One Strang step.
    pub fn step(&mut self, field: &mut PhaseSpaceField, profile: &StiffnessProfile, dt: f64) -> Result<(), PropagatorError> {
        self.steps(field, profile, 1, dt)
    }

    /// `n` Strang steps with fused half steps.
    pub fn steps(&mut self, field: &mut PhaseSpaceField, profile: &StiffnessProfile, n: usize, dt: f64) -> Result<(), PropagatorError> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(PropagatorError::InvalidArgument(format!("dt = {dt} must be positive")));
        }
        if field.grid() != self.grid() {
            return Err(PropagatorError::GridMismatch);
        }
        let t0 = field.time();
        profile.check_span(t0, t0 + n as f64 * dt)?;
        self.advance_unchecked(field, profile, n, dt, t0, 0);
        Ok(())
    }
}

/// One Strang step of size `dt`, returning the advanced field.
pub fn step_strang(field: &PhaseSpaceField, profile: &StiffnessProfile, dt: f64) -> Result<PhaseSpaceField, PropagatorError> {
    let mut out = field.clone();
    SplitStepper::new(*field.grid()).step(&mut out, profile, dt)?;
    let ring = out.outer_ring_mass();
    if ring > DEFAULT_BOUNDARY_THRESHOLD {
        log::warn!("outer-ring mass {ring:e} exceeds {DEFAULT_BOUNDARY_THRESHOLD:e} at t = {}", out.time());
    }
    Ok(out)
}

/// Result of [`propagate`].
#[derive(Debug, Clone)]
pub struct Propagation {
    pub field: PhaseSpaceField,
    pub steps: usize,
    /// The step actually used: the span divided by the step count.
    pub dt: f64,
    /// Largest outer-ring mass fraction seen at the observation points.
    pub max_boundary_mass: f64,
}

/// Number of steps of size `dt` in `span`, if `dt` divides it up to the
/// rounding of `n` additions.
pub fn step_count(span: f64, dt: f64) -> Option<usize> {
    if !(span > 0.0 && dt > 0.0 && span.is_finite() && dt.is_finite()) {
        return None;
    }
    let n = (span / dt).round();
    if n < 1.0 || n > u32::MAX as f64 {
        return None;
    }
    let slack = n * f64::EPSILON * span;
    ((n * dt - span).abs() <= slack.max(f64::EPSILON * span)).then_some(n as usize)
}

/// Evolves `field0` to `t1`, calling `observer` on the initial field, every
/// `stride` steps and on the final field.
pub fn propagate<F>(
    field0: PhaseSpaceField,
    profile: &StiffnessProfile,
    t1: f64,
    dt: f64,
    stride: usize,
    mut observer: F,
) -> Result<Propagation, PropagatorError>
where
    F: FnMut(&PhaseSpaceField) -> Result<(), String>,
{
    let t0 = field0.time();
    if !(t1 > t0) {
        return Err(PropagatorError::InvalidArgument(format!("t1 = {t1} must exceed the field time {t0}")));
    }
    let n = step_count(t1 - t0, dt)
        .ok_or_else(|| PropagatorError::InvalidArgument(format!("dt = {dt} does not divide the span {}", t1 - t0)))?;
    if stride == 0 {
        return Err(PropagatorError::InvalidArgument("observer stride must be at least 1".into()));
    }
    profile.check_span(t0, t1)?;
    let dt = (t1 - t0) / n as f64;
    let mut stepper = SplitStepper::new(*field0.grid());
    let mut field = field0;
    let mut max_ring = 0.0f64;
    let mut observe = |field: &PhaseSpaceField, max_ring: &mut f64| -> Result<(), PropagatorError> {
        let ring = field.outer_ring_mass();
        if ring > DEFAULT_BOUNDARY_THRESHOLD && ring > *max_ring {
            log::warn!("outer-ring mass {ring:e} exceeds {DEFAULT_BOUNDARY_THRESHOLD:e} at t = {}", field.time());
        }
        *max_ring = max_ring.max(ring);
        observer(field).map_err(|message| PropagatorError::Observer { t: field.time(), message })
    };
    observe(&field, &mut max_ring)?;
    let mut done = 0;
    while done < n {
        let chunk = stride.min(n - done);
        stepper.advance_unchecked(&mut field, profile, chunk, dt, t0, done);
        done += chunk;
        if done == n {
            field.set_time(t1);
        }
        observe(&field, &mut max_ring)?;
    }
    Ok(Propagation { field, steps: n, dt, max_boundary_mass: max_ring })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::ClassicalState;
    use crate::propagator::initialize_gaussian;

    #[test]
    fn phase_runs_match_direct_evaluation() {
        let mut out = vec![Complex64::default(); 64];
        phase_run(&mut out, -32, 0.731, 0.5);
        for (m, z) in out.iter().enumerate() {
            let exact = Complex64::from_polar(0.5, (m as f64 - 32.0) * 0.731);
            assert!((z - exact).norm() < 1e-14);
        }
    }

    #[test]
    fn divisibility() {
        assert_eq!(step_count(1.0, 0.1), Some(10));
        assert_eq!(step_count(2.0 * std::f64::consts::PI, 2.0 * std::f64::consts::PI / 1000.0), Some(1000));
        assert_eq!(step_count(1.0, 0.3), None);
        assert_eq!(step_count(-1.0, 0.1), None);
    }

    #[test]
    fn observer_failure_carries_time() {
        let g = PhaseSpaceGrid::new(32, 32, 8.0, 8.0).unwrap();
        let f = initialize_gaussian(&g, ClassicalState::new(0.0, 0.0), (1.0, 1.0)).unwrap();
        let mut calls = 0;
        let e = propagate(f, &StiffnessProfile::constant(1.0), 1.0, 0.1, 2, |_| {
            calls += 1;
            if calls == 3 { Err("boom".into()) } else { Ok(()) }
        })
        .unwrap_err();
        match e {
            PropagatorError::Observer { t, message } => {
                assert!((t - 0.4).abs() < 1e-12);
                assert_eq!(message, "boom");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn rejects_non_dividing_step() {
        let g = PhaseSpaceGrid::new(32, 32, 8.0, 8.0).unwrap();
        let f = initialize_gaussian(&g, ClassicalState::new(0.0, 0.0), (1.0, 1.0)).unwrap();
        assert!(propagate(f, &StiffnessProfile::constant(1.0), 1.0, 0.3, 1, |_| Ok(())).is_err());
    }
}
