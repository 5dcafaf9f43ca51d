use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::PropagatorError;

/// A uniform periodic grid on `[-lx, lx) × [-lp, lp)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseSpaceGrid {
    nx: usize,
    np: usize,
    lx: f64,
    lp: f64,
}

/// Angular frequencies of an `n`-point periodic grid of length `2l`, in
/// transform order: `0, +1, …, +(n/2 - 1), -n/2, …, -1` times `π/l`.
pub fn frequencies(n: usize, l: f64) -> Vec<f64> {
    let dk = PI / l;
    (0..n).map(|m| if m < n / 2 { m as f64 * dk } else { (m as f64 - n as f64) * dk }).collect()
}

impl PhaseSpaceGrid {
    pub fn new(nx: usize, np: usize, lx: f64, lp: f64) -> Result<Self, PropagatorError> {
        for (name, n) in [("nx", nx), ("np", np)] {
            if !n.is_power_of_two() || n < 32 {
                return Err(PropagatorError::InvalidGrid(format!("{name} = {n} is not a power of two >= 32")));
            }
        }
        for (name, l) in [("lx", lx), ("lp", lp)] {
            if !(l.is_finite() && l > 0.0) {
                return Err(PropagatorError::InvalidGrid(format!("{name} = {l} must be positive and finite")));
            }
        }
        Ok(PhaseSpaceGrid { nx, np, lx, lp })
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn np(&self) -> usize {
        self.np
    }

    pub fn lx(&self) -> f64 {
        self.lx
    }

    pub fn lp(&self) -> f64 {
        self.lp
    }

    pub fn len(&self) -> usize {
        self.nx * self.np
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dx(&self) -> f64 {
        2.0 * self.lx / self.nx as f64
    }

    pub fn dp(&self) -> f64 {
        2.0 * self.lp / self.np as f64
    }

    pub fn cell_area(&self) -> f64 {
        self.dx() * self.dp()
    }

    pub fn x(&self, i: usize) -> f64 {
        -self.lx + i as f64 * self.dx()
    }

    pub fn p(&self, j: usize) -> f64 {
        -self.lp + j as f64 * self.dp()
    }

    pub fn xs(&self) -> Vec<f64> {
        (0..self.nx).map(|i| self.x(i)).collect()
    }

    pub fn ps(&self) -> Vec<f64> {
        (0..self.np).map(|j| self.p(j)).collect()
    }

    /// Frequencies conjugate to `x`, i.e. the spectrum of `λx`.
    pub fn kappa_x(&self) -> Vec<f64> {
        frequencies(self.nx, self.lx)
    }

    /// Frequencies conjugate to `p`, i.e. the spectrum of `λp`.
    pub fn kappa_p(&self) -> Vec<f64> {
        frequencies(self.np, self.lp)
    }

    /// Row-major index of node `(i, j)`; `i` runs along `x`.
    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.np + j
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spacings() {
        let g = PhaseSpaceGrid::new(256, 256, 8.0, 8.0).unwrap();
        assert_eq!(g.dx(), 0.0625);
        assert_eq!(g.dp(), 0.0625);
        let g = PhaseSpaceGrid::new(32, 64, 4.0, 8.0).unwrap();
        assert_eq!(g.dx(), 0.25);
        assert_eq!(g.dp(), 0.25);
    }

    #[test]
    fn rejects_bad_sizes() {
        assert!(matches!(PhaseSpaceGrid::new(100, 256, 8.0, 8.0), Err(PropagatorError::InvalidGrid(_))));
        assert!(PhaseSpaceGrid::new(16, 256, 8.0, 8.0).is_err());
        assert!(PhaseSpaceGrid::new(32, 32, 0.0, 8.0).is_err());
        assert!(PhaseSpaceGrid::new(32, 32, 1.0, f64::NAN).is_err());
    }

    #[test]
    fn frequency_layout() {
        let k = frequencies(8, PI);
        assert_eq!(k, vec![0.0, 1.0, 2.0, 3.0, -4.0, -3.0, -2.0, -1.0]);
    }
}
