use num_complex::Complex64;

use super::InvariantError;
use crate::propagator::spectral::SpectralPlan;
use crate::propagator::{PhaseSpaceField, PhaseSpaceGrid};

/// `Î = M(x, p) + D(λx, λp)` on a grid: `M` is sampled on the nodes and `D`
/// on the double-frequency grid, both row-major with `x`/`κx` outer.
#[derive(Debug, Clone, PartialEq)]
pub struct InvariantOperatorSplit {
    grid: PhaseSpaceGrid,
    rho: f64,
    rhodot: f64,
    m: Vec<f64>,
    d: Vec<f64>,
}

/// `½[x²/ρ² + (ρ̇x - ρp)²]` and `½[κp²/ρ² + (ρ̇κp + ρκx)²]` sampled on `grid`.
pub fn build_split_operator(grid: &PhaseSpaceGrid, rho: f64, rhodot: f64) -> Result<InvariantOperatorSplit, InvariantError> {
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(InvariantError::NonPositiveRho(rho));
    }
    if !rhodot.is_finite() {
        return Err(InvariantError::InvalidArgument(format!("rhodot = {rhodot} must be finite")));
    }
    let inv2 = 1.0 / (rho * rho);
    let mut m = Vec::with_capacity(grid.len());
    for x in grid.xs() {
        for p in grid.ps() {
            let c = rhodot * x - rho * p;
            m.push(0.5 * (x * x * inv2 + c * c));
        }
    }
    let kp = grid.kappa_p();
    let mut d = Vec::with_capacity(grid.len());
    for kx in grid.kappa_x() {
        for &k in &kp {
            let c = rhodot * k + rho * kx;
            d.push(0.5 * (k * k * inv2 + c * c));
        }
    }
    Ok(InvariantOperatorSplit { grid: *grid, rho, rhodot, m, d })
}

impl InvariantOperatorSplit {
    pub fn grid(&self) -> &PhaseSpaceGrid {
        &self.grid
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn rhodot(&self) -> f64 {
        self.rhodot
    }

    pub fn multiplicative(&self) -> &[f64] {
        &self.m
    }

    pub fn spectral(&self) -> &[f64] {
        &self.d
    }

    /// An operator with both parts identically zero.
    pub fn zero(grid: &PhaseSpaceGrid) -> Self {
        InvariantOperatorSplit { grid: *grid, rho: 1.0, rhodot: 0.0, m: vec![0.0; grid.len()], d: vec![0.0; grid.len()] }
    }
}

/// Applies split operators to fields, reusing transform plans and buffers.
pub struct InvariantEvaluator {
    plan: SpectralPlan,
    buf: Vec<Complex64>,
    applied: Vec<Complex64>,
}

fn deterministic_field(grid: &PhaseSpaceGrid) -> Vec<Complex64> {
    let golden = 0.618_033_988_749_894_9_f64;
    (0..grid.len())
        .map(|n| {
            let a = (n as f64 * golden).fract() - 0.5;
            let b = ((n as f64 + 0.5) * golden * golden).fract() - 0.5;
            Complex64::new(a, b)
        })
        .collect()
}

/// Checks `Σ|ψ̃|² = Nx Np Σ|ψ|²` for the unnormalized double transform on an
/// irregular test field, returning the relative mismatch.
pub fn parseval_self_test(grid: &PhaseSpaceGrid) -> Result<f64, InvariantError> {
    let mut plan = SpectralPlan::new(*grid);
    parseval_with(&mut plan)
}

fn parseval_with(plan: &mut SpectralPlan) -> Result<f64, InvariantError> {
    let grid = *plan.grid();
    let mut data = deterministic_field(&grid);
    let direct: f64 = data.iter().map(|z| z.norm_sqr()).sum();
    plan.forward2(&mut data);
    let spectral: f64 = data.iter().map(|z| z.norm_sqr()).sum::<f64>() / grid.len() as f64;
    let mismatch = (spectral - direct).abs() / direct;
    if mismatch > 1e-12 {
        return Err(InvariantError::Parseval(mismatch));
    }
    Ok(mismatch)
}

impl InvariantEvaluator {
    /// Builds the transform plans and runs the Parseval self-test.
    pub fn new(grid: PhaseSpaceGrid) -> Result<Self, InvariantError> {
        let mut plan = SpectralPlan::new(grid);
        parseval_with(&mut plan)?;
        Ok(InvariantEvaluator { plan, buf: vec![Complex64::default(); grid.len()], applied: vec![Complex64::default(); grid.len()] })
    }

    fn check(&self, field: &PhaseSpaceField, op: &InvariantOperatorSplit) -> Result<(), InvariantError> {
        if field.grid() != self.plan.grid() || op.grid() != self.plan.grid() {
            return Err(InvariantError::GridMismatch);
        }
        Ok(())
    }

    /// `⟨Î⟩ = Σ M|ψ|² ΔxΔp + Σ D|ψ̃|² ΔxΔp/(Nx Np)`.
    pub fn expectation(&mut self, field: &PhaseSpaceField, op: &InvariantOperatorSplit) -> Result<f64, InvariantError> {
        self.check(field, op)?;
        let g = *self.plan.grid();
        let real: f64 = field.values().iter().zip(&op.m).map(|(z, m)| m * z.norm_sqr()).sum();
        self.buf.copy_from_slice(field.values());
        self.plan.forward2(&mut self.buf);
        let spectral: f64 = self.buf.iter().zip(&op.d).map(|(z, d)| d * z.norm_sqr()).sum::<f64>() / g.len() as f64;
        Ok((real + spectral) * g.cell_area())
    }

    /// `out = Î ψ`.
    fn apply_into(&mut self, input: &[Complex64], op: &InvariantOperatorSplit, out: &mut [Complex64]) {
        self.buf.copy_from_slice(input);
        self.plan.forward2(&mut self.buf);
        self.buf.iter_mut().zip(&op.d).for_each(|(z, d)| *z *= d);
        self.plan.inverse2(&mut self.buf);
        for ((o, z), (b, m)) in out.iter_mut().zip(input).zip(self.buf.iter().zip(&op.m)) {
            *o = z * m + b;
        }
    }

    /// `Î ψ` as a new field.
    pub fn apply(&mut self, field: &PhaseSpaceField, op: &InvariantOperatorSplit) -> Result<PhaseSpaceField, InvariantError> {
        self.check(field, op)?;
        let mut out = vec![Complex64::default(); field.values().len()];
        self.apply_into(field.values(), op, &mut out);
        Ok(PhaseSpaceField::new(*field.grid(), out, field.time())?)
    }

    /// `(⟨Î⟩, ⟨Î²⟩ - ⟨Î⟩²)` with `Î²ψ` formed by two successive applications.
    pub fn expectation_and_variance(
        &mut self,
        field: &PhaseSpaceField,
        op: &InvariantOperatorSplit,
    ) -> Result<(f64, f64), InvariantError> {
        self.check(field, op)?;
        let area = field.grid().cell_area();
        let psi = field.values();
        let mut once = std::mem::take(&mut self.applied);
        self.apply_into(psi, op, &mut once);
        let mean: f64 = psi.iter().zip(&once).map(|(a, b)| (a.conj() * b).re).sum::<f64>() * area;
        let mut twice = vec![Complex64::default(); psi.len()];
        self.apply_into(&once, op, &mut twice);
        let second: f64 = psi.iter().zip(&twice).map(|(a, b)| (a.conj() * b).re).sum::<f64>() * area;
        self.applied = once;
        Ok((mean, second - mean * mean))
    }

    pub fn variance(&mut self, field: &PhaseSpaceField, op: &InvariantOperatorSplit) -> Result<f64, InvariantError> {
        Ok(self.expectation_and_variance(field, op)?.1)
    }
}

/// One-shot `⟨Î⟩`; use [`InvariantEvaluator`] in loops.
pub fn expectation_invariant(field: &PhaseSpaceField, op: &InvariantOperatorSplit) -> Result<f64, InvariantError> {
    InvariantEvaluator::new(*field.grid())?.expectation(field, op)
}

/// One-shot `Var(Î)`; use [`InvariantEvaluator`] in loops.
pub fn variance_invariant(field: &PhaseSpaceField, op: &InvariantOperatorSplit) -> Result<f64, InvariantError> {
    InvariantEvaluator::new(*field.grid())?.variance(field, op)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::ClassicalState;
    use crate::propagator::initialize_gaussian;

    fn grid() -> PhaseSpaceGrid {
        PhaseSpaceGrid::new(64, 64, 8.0, 8.0).unwrap()
    }

    #[test]
    fn collapsed_forms() {
        let g = grid();
        let op = build_split_operator(&g, 1.0, 0.0).unwrap();
        let (x, p) = (g.x(5), g.p(9));
        assert_eq!(op.multiplicative()[g.index(5, 9)], 0.5 * (x * x + p * p));
        let (kx, kp) = (g.kappa_x()[3], g.kappa_p()[60]);
        assert_eq!(op.spectral()[g.index(3, 60)], 0.5 * (kx * kx + kp * kp));
        let op = build_split_operator(&g, 2.0, 0.0).unwrap();
        assert!((op.multiplicative()[g.index(5, 9)] - (x * x / 8.0 + 2.0 * p * p)).abs() < 1e-12);
        assert!((op.spectral()[g.index(3, 60)] - (kp * kp / 8.0 + 2.0 * kx * kx)).abs() < 1e-12);
    }

    #[test]
    fn nonnegative_parts() {
        let op = build_split_operator(&grid(), 0.3, -2.5).unwrap();
        assert!(op.multiplicative().iter().all(|m| *m >= 0.0));
        assert!(op.spectral().iter().all(|d| *d >= 0.0));
        assert!(build_split_operator(&grid(), -1.0, 0.0).is_err());
    }

    #[test]
    fn parseval_holds() {
        assert!(parseval_self_test(&grid()).unwrap() <= 1e-12);
    }

    #[test]
    fn zero_operator_has_no_spread() {
        let g = grid();
        let f = initialize_gaussian(&g, ClassicalState::new(1.0, 0.5), (1.0, 1.0)).unwrap();
        let mut ev = InvariantEvaluator::new(g).unwrap();
        let (mean, var) = ev.expectation_and_variance(&f, &InvariantOperatorSplit::zero(&g)).unwrap();
        assert_eq!(mean, 0.0);
        assert_eq!(var, 0.0);
    }

    #[test]
    fn two_routes_to_the_mean_agree() {
        let g = grid();
        let f = initialize_gaussian(&g, ClassicalState::new(1.0, -0.5), (0.8, 1.1)).unwrap();
        let op = build_split_operator(&g, 1.3, 0.4).unwrap();
        let mut ev = InvariantEvaluator::new(g).unwrap();
        let a = ev.expectation(&f, &op).unwrap();
        let (b, var) = ev.expectation_and_variance(&f, &op).unwrap();
        assert!((a - b).abs() < 1e-12 * a);
        assert!(var > 0.0);
    }

    #[test]
    fn grid_mismatch() {
        let f = initialize_gaussian(&grid(), ClassicalState::new(0.0, 0.0), (1.0, 1.0)).unwrap();
        let other = PhaseSpaceGrid::new(32, 32, 8.0, 8.0).unwrap();
        let op = build_split_operator(&other, 1.0, 0.0).unwrap();
        assert!(matches!(expectation_invariant(&f, &op), Err(InvariantError::GridMismatch)));
    }
}
