use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{PhaseSpaceGrid, PropagatorError};
use crate::dynamics::ClassicalState;

/// Largest admissible ratio `|ψ|²(edge) / |ψ|²(peak)` for initial Gaussians.
pub const GAUSSIAN_EDGE_RATIO: f64 = 1e-12;

/// Default bound on the outer-ring mass fraction.
pub const DEFAULT_BOUNDARY_THRESHOLD: f64 = 1e-8;

/// A KvN wavefunction sampled on a grid, stored row-major (`x` outer).
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseSpaceField {
    grid: PhaseSpaceGrid,
    values: Vec<Complex64>,
    time: f64,
}

/// `(⟨x⟩, ⟨p⟩, ⟨x²⟩, ⟨p²⟩)` under the density `|ψ|²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub mean_x: f64,
    pub mean_p: f64,
    pub mean_x2: f64,
    pub mean_p2: f64,
}

/// `ψ(x, p) = A exp(-(x - x0)²/(2σx²) - (p - p0)²/(2σp²))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Gaussian {
    pub center: ClassicalState,
    pub sx: f64,
    pub sp: f64,
    pub amplitude: f64,
}

impl Gaussian {
    /// Checks containment on `grid` and fixes the amplitude so that the
    /// sampled field has unit discrete norm.
    pub fn on_grid(grid: &PhaseSpaceGrid, center: ClassicalState, widths: (f64, f64)) -> Result<Self, PropagatorError> {
        let (sx, sp) = widths;
        if !(sx > 0.0 && sp > 0.0 && sx.is_finite() && sp.is_finite()) {
            return Err(PropagatorError::InvalidArgument(format!("widths must be positive, got ({sx}, {sp})")));
        }
        if !(center.q.is_finite() && center.p.is_finite()) {
            return Err(PropagatorError::InvalidArgument("center must be finite".into()));
        }
        let dist_x = grid.lx() - center.q.abs();
        let dist_p = grid.lp() - center.p.abs();
        let ratio = (-(dist_x / sx).powi(2)).exp().max((-(dist_p / sp).powi(2)).exp());
        if dist_x <= 0.0 || dist_p <= 0.0 || ratio >= GAUSSIAN_EDGE_RATIO {
            let margin = (1.0 / GAUSSIAN_EDGE_RATIO).ln().sqrt();
            return Err(PropagatorError::BoundaryMass {
                fraction: ratio,
                suggested_lx: (center.q.abs() + margin * sx).ceil().max(grid.lx()),
                suggested_lp: (center.p.abs() + margin * sp).ceil().max(grid.lp()),
            });
        }
        let mut g = Gaussian { center, sx, sp, amplitude: 1.0 };
        let mass: f64 = (0..grid.nx())
            .flat_map(|i| (0..grid.np()).map(move |j| (i, j)))
            .map(|(i, j)| g.eval(grid.x(i), grid.p(j)).powi(2))
            .sum::<f64>()
            * grid.cell_area();
        g.amplitude = 1.0 / mass.sqrt();
        Ok(g)
    }

    pub fn eval(&self, x: f64, p: f64) -> f64 {
        let u = (x - self.center.q) / self.sx;
        let v = (p - self.center.p) / self.sp;
        self.amplitude * (-0.5 * (u * u + v * v)).exp()
    }

    pub fn sample(&self, grid: &PhaseSpaceGrid) -> PhaseSpaceField {
        PhaseSpaceField::from_fn(*grid, 0.0, |x, p| Complex64::new(self.eval(x, p), 0.0))
    }
}

/// A normalized Gaussian at `center` with widths `(σx, σp)`, at `t = 0`.
///
/// Refuses when the density at the nearest edge is not below
/// [`GAUSSIAN_EDGE_RATIO`] of the peak, suggesting larger extents.
pub fn initialize_gaussian(
    grid: &PhaseSpaceGrid,
    center: ClassicalState,
    widths: (f64, f64),
) -> Result<PhaseSpaceField, PropagatorError> {
    Ok(Gaussian::on_grid(grid, center, widths)?.sample(grid))
}

impl PhaseSpaceField {
    pub fn new(grid: PhaseSpaceGrid, values: Vec<Complex64>, time: f64) -> Result<Self, PropagatorError> {
        if values.len() != grid.len() {
            return Err(PropagatorError::InvalidArgument(format!("{} values for a grid of {} nodes", values.len(), grid.len())));
        }
        Ok(PhaseSpaceField { grid, values, time })
    }

    pub fn from_fn(grid: PhaseSpaceGrid, time: f64, f: impl Fn(f64, f64) -> Complex64) -> Self {
        let mut values = Vec::with_capacity(grid.len());
        for i in 0..grid.nx() {
            let x = grid.x(i);
            for j in 0..grid.np() {
                values.push(f(x, grid.p(j)));
            }
        }
        PhaseSpaceField { grid, values, time }
    }

    pub fn grid(&self) -> &PhaseSpaceGrid {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn set_time(&mut self, t: f64) {
        self.time = t;
    }

    pub fn at(&self, i: usize, j: usize) -> Complex64 {
        self.values[self.grid.index(i, j)]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.values.iter().map(|z| z.norm_sqr()).sum::<f64>() * self.grid.cell_area()
    }

    /// `‖ψ‖ = (Σ |ψ|² Δx Δp)^½`.
    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// Plain Riemann sums, normalized by the field's own mass.
    pub fn moments(&self) -> Moments {
        let g = &self.grid;
        let (mut m0, mut mx, mut mp, mut mx2, mut mp2) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for i in 0..g.nx() {
            let x = g.x(i);
            for j in 0..g.np() {
                let p = g.p(j);
                let w = self.values[g.index(i, j)].norm_sqr();
                m0 += w;
                mx += w * x;
                mp += w * p;
                mx2 += w * x * x;
                mp2 += w * p * p;
            }
        }
        Moments { mean_x: mx / m0, mean_p: mp / m0, mean_x2: mx2 / m0, mean_p2: mp2 / m0 }
    }

    /// Fraction of the mass in the two outermost rows and columns.
    pub fn outer_ring_mass(&self) -> f64 {
        let g = &self.grid;
        let (nx, np) = (g.nx(), g.np());
        let mut ring = 0.0;
        let mut total = 0.0;
        for i in 0..nx {
            for j in 0..np {
                let w = self.values[g.index(i, j)].norm_sqr();
                total += w;
                if i < 2 || i >= nx - 2 || j < 2 || j >= np - 2 {
                    ring += w;
                }
            }
        }
        if total > 0.0 {
            ring / total
        } else {
            0.0
        }
    }

    /// `max |ψ - φ|` over the grid.
    pub fn linf_distance(&self, other: &PhaseSpaceField) -> Result<f64, PropagatorError> {
        if self.grid != other.grid {
            return Err(PropagatorError::GridMismatch);
        }
        Ok(self.values.iter().zip(&other.values).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max))
    }
}
