//! Batched 1D transforms along either axis of a row-major field.
//!
//! Forward transforms use the kernel `e^{-iκu}` without normalization; the
//! inverse carries `1/N`.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::PhaseSpaceGrid;

pub struct SpectralPlan {
    grid: PhaseSpaceGrid,
    fwd_x: Arc<dyn Fft<f64>>,
    inv_x: Arc<dyn Fft<f64>>,
    fwd_p: Arc<dyn Fft<f64>>,
    inv_p: Arc<dyn Fft<f64>>,
    scratch: Vec<Complex64>,
    transposed: Vec<Complex64>,
}

const BLOCK: usize = 16;

/// `dst[c * rows + r] = src[r * cols + c]`.
pub(crate) fn transpose(src: &[Complex64], dst: &mut [Complex64], rows: usize, cols: usize) {
    for rb in (0..rows).step_by(BLOCK) {
        for cb in (0..cols).step_by(BLOCK) {
            for r in rb..(rb + BLOCK).min(rows) {
                for c in cb..(cb + BLOCK).min(cols) {
                    dst[c * rows + r] = src[r * cols + c];
                }
            }
        }
    }
}

impl SpectralPlan {
    pub fn new(grid: PhaseSpaceGrid) -> Self {
        let mut planner = FftPlanner::new();
        let fwd_x = planner.plan_fft_forward(grid.nx());
        let inv_x = planner.plan_fft_inverse(grid.nx());
        let fwd_p = planner.plan_fft_forward(grid.np());
        let inv_p = planner.plan_fft_inverse(grid.np());
        let scratch_len = [&fwd_x, &inv_x, &fwd_p, &inv_p].iter().map(|f| f.get_inplace_scratch_len()).max().unwrap_or(0);
        SpectralPlan {
            grid,
            fwd_x,
            inv_x,
            fwd_p,
            inv_p,
            scratch: vec![Complex64::default(); scratch_len],
            transposed: vec![Complex64::default(); grid.len()],
        }
    }

    pub fn grid(&self) -> &PhaseSpaceGrid {
        &self.grid
    }

    /// Transforms along `p`, applies `mul(i, row)` to each spectral row
    /// (row `i` holds the `κp` spectrum at `x_i`), and transforms back.
    /// The `1/Np` normalization is left to `mul`.
    pub fn along_p(&mut self, data: &mut [Complex64], mut mul: impl FnMut(usize, &mut [Complex64])) {
        let np = self.grid.np();
        self.fwd_p.process_with_scratch(data, &mut self.scratch);
        for (i, row) in data.chunks_exact_mut(np).enumerate() {
            mul(i, row);
        }
        self.inv_p.process_with_scratch(data, &mut self.scratch);
    }

    /// Same along `x`; `mul(j, row)` sees the `κx` spectrum at `p_j`. The
    /// `1/Nx` normalization is left to `mul`.
    pub fn along_x(&mut self, data: &mut [Complex64], mut mul: impl FnMut(usize, &mut [Complex64])) {
        let (nx, np) = (self.grid.nx(), self.grid.np());
        transpose(data, &mut self.transposed, nx, np);
        self.fwd_x.process_with_scratch(&mut self.transposed, &mut self.scratch);
        for (j, row) in self.transposed.chunks_exact_mut(nx).enumerate() {
            mul(j, row);
        }
        self.inv_x.process_with_scratch(&mut self.transposed, &mut self.scratch);
        transpose(&self.transposed, data, np, nx);
    }

    /// Unnormalized double transform; the result keeps the row-major layout
    /// with index `mx * Np + mp`.
    pub fn forward2(&mut self, data: &mut [Complex64]) {
        let (nx, np) = (self.grid.nx(), self.grid.np());
        self.fwd_p.process_with_scratch(data, &mut self.scratch);
        transpose(data, &mut self.transposed, nx, np);
        self.fwd_x.process_with_scratch(&mut self.transposed, &mut self.scratch);
        transpose(&self.transposed, data, np, nx);
    }

    /// Inverse of [`SpectralPlan::forward2`], including the `1/(Nx Np)` factor.
    pub fn inverse2(&mut self, data: &mut [Complex64]) {
        let (nx, np) = (self.grid.nx(), self.grid.np());
        self.inv_p.process_with_scratch(data, &mut self.scratch);
        transpose(data, &mut self.transposed, nx, np);
        self.inv_x.process_with_scratch(&mut self.transposed, &mut self.scratch);
        transpose(&self.transposed, data, np, nx);
        let scale = 1.0 / self.grid.len() as f64;
        data.iter_mut().for_each(|z| *z *= scale);
    }
}
