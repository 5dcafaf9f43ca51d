//! Exact Liouville transport: `ψ(z, t1) = ψ0(Φ(t0 ← t1) z)`, with `Φ` the
//! backward classical flow.

use num_complex::Complex64;

use super::field::Gaussian;
use super::{PhaseSpaceField, PhaseSpaceGrid, PropagatorError};
use crate::dynamics::ode::{no_guard, Dopri5};
use crate::dynamics::{ode_failure, transfer_matrix, StiffnessProfile, Tolerances};

/// Initial data for the oracle.
#[derive(Debug, Clone)]
pub enum InitialCondition {
    /// Evaluated in closed form, so no interpolation error enters.
    Gaussian(Gaussian),
    /// Interpolated with periodic bicubic (Keys) convolution.
    Sampled(PhaseSpaceField),
}

/// How the backward flow is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CharacteristicsMode {
    /// One integration of the 2x2 transfer matrix, applied to every node.
    #[default]
    TransferMatrix,
    /// An independent backward integration from every node.
    PerNode,
}

fn keys(s: f64) -> f64 {
    const A: f64 = -0.5;
    let s = s.abs();
    if s <= 1.0 {
        ((A + 2.0) * s - (A + 3.0)) * s * s + 1.0
    } else if s < 2.0 {
        ((A * s - 5.0 * A) * s + 8.0 * A) * s - 4.0 * A
    } else {
        0.0
    }
}

/// Periodic bicubic interpolation of a sampled field at `(x, p)`.
pub fn interpolate_bicubic(field: &PhaseSpaceField, x: f64, p: f64) -> Complex64 {
    let g = field.grid();
    let (nx, np) = (g.nx() as i64, g.np() as i64);
    let u = (x + g.lx()) / g.dx();
    let v = (p + g.lp()) / g.dp();
    let (iu, iv) = (u.floor(), v.floor());
    let (fu, fv) = (u - iu, v - iv);
    let (iu, iv) = (iu as i64, iv as i64);
    let wu: [f64; 4] = std::array::from_fn(|a| keys(fu - (a as f64 - 1.0)));
    let wv: [f64; 4] = std::array::from_fn(|b| keys(fv - (b as f64 - 1.0)));
    let mut acc = Complex64::default();
    for (a, wa) in wu.iter().enumerate() {
        let i = (iu + a as i64 - 1).rem_euclid(nx) as usize;
        for (b, wb) in wv.iter().enumerate() {
            let j = (iv + b as i64 - 1).rem_euclid(np) as usize;
            acc += field.at(i, j) * (wa * wb);
        }
    }
    acc
}

impl InitialCondition {
    pub fn eval(&self, x: f64, p: f64) -> Complex64 {
        match self {
            InitialCondition::Gaussian(g) => Complex64::new(g.eval(x, p), 0.0),
            InitialCondition::Sampled(f) => interpolate_bicubic(f, x, p),
        }
    }
}

/// The exact solution at `t1` of data given at `t0`, sampled on `grid`.
pub fn solve_characteristics(
    initial: &InitialCondition,
    grid: &PhaseSpaceGrid,
    profile: &StiffnessProfile,
    t0: f64,
    t1: f64,
) -> Result<PhaseSpaceField, PropagatorError> {
    solve_characteristics_with(initial, grid, profile, t0, t1, CharacteristicsMode::TransferMatrix, Tolerances::default())
}

pub fn solve_characteristics_with(
    initial: &InitialCondition,
    grid: &PhaseSpaceGrid,
    profile: &StiffnessProfile,
    t0: f64,
    t1: f64,
    mode: CharacteristicsMode,
    tol: Tolerances,
) -> Result<PhaseSpaceField, PropagatorError> {
    profile.check_span(t0.min(t1), t0.max(t1))?;
    match mode {
        CharacteristicsMode::TransferMatrix => {
            let m = transfer_matrix(profile, t1, t0, tol)?;
            Ok(PhaseSpaceField::from_fn(*grid, t1, |x, p| {
                initial.eval(m[0][0] * x + m[0][1] * p, m[1][0] * x + m[1][1] * p)
            }))
        }
        CharacteristicsMode::PerNode => {
            let solver = Dopri5::new(tol);
            let mut values = Vec::with_capacity(grid.len());
            for i in 0..grid.nx() {
                for j in 0..grid.np() {
                    let y = solver
                        .integrate(
                            |t, y: &[f64; 2]| [y[1], -profile.eval_unchecked(t) * y[0]],
                            t1,
                            [grid.x(i), grid.p(j)],
                            &[t0],
                            no_guard,
                        )
                        .map_err(|e| PropagatorError::NodeFailure { index: grid.index(i, j), source: ode_failure(e) })?;
                    values.push(initial.eval(y[0][0], y[0][1]));
                }
            }
            PhaseSpaceField::new(*grid, values, t1)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::ClassicalState;

    #[test]
    fn keys_partition_of_unity() {
        for f in [0.0, 0.25, 0.5, 0.9] {
            let s: f64 = (0..4).map(|a| keys(f - (a as f64 - 1.0))).sum();
            assert!((s - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn bicubic_reproduces_nodes_and_smooth_data() {
        let grid = PhaseSpaceGrid::new(64, 64, 8.0, 8.0).unwrap();
        let g = Gaussian::on_grid(&grid, ClassicalState::new(0.5, -0.3), (1.0, 1.2)).unwrap();
        let f = g.sample(&grid);
        assert!((interpolate_bicubic(&f, grid.x(10), grid.p(40)) - f.at(10, 40)).norm() < 1e-15);
        let err = (interpolate_bicubic(&f, 0.61, -0.17).re - g.eval(0.61, -0.17)).abs();
        assert!(err < 2e-3, "{err}");
    }

    #[test]
    fn free_flow_is_a_shear() {
        let grid = PhaseSpaceGrid::new(64, 64, 8.0, 8.0).unwrap();
        let g = Gaussian::on_grid(&grid, ClassicalState::new(0.0, 0.5), (1.0, 1.0)).unwrap();
        let out = solve_characteristics(&InitialCondition::Gaussian(g), &grid, &StiffnessProfile::constant(0.0), 0.0, 1.0).unwrap();
        for (i, j) in [(10, 20), (32, 33), (40, 12)] {
            let (x, p) = (grid.x(i), grid.p(j));
            assert!((out.at(i, j).re - g.eval(x - p, p)).abs() < 1e-12);
        }
    }

    #[test]
    fn per_node_agrees_with_transfer_matrix() {
        let grid = PhaseSpaceGrid::new(32, 32, 8.0, 8.0).unwrap();
        let g = Gaussian::on_grid(&grid, ClassicalState::new(1.0, 0.0), (1.0, 1.0)).unwrap();
        let ic = InitialCondition::Gaussian(g);
        let prof = StiffnessProfile::mathieu(1.0, 0.5, 2.0);
        let a = solve_characteristics(&ic, &grid, &prof, 0.0, 3.0).unwrap();
        let b = solve_characteristics_with(&ic, &grid, &prof, 0.0, 3.0, CharacteristicsMode::PerNode, Tolerances::default()).unwrap();
        assert!(a.linf_distance(&b).unwrap() < 1e-8);
    }
}
