//! `⟨ψ|Ô|ψ⟩` for an exact operator polynomial, with `λx, λp` realized as
//! multiplication by `κx, κp` after a double transform.

use std::collections::BTreeMap;

use num_complex::Complex64;

use super::InvariantError;
use crate::propagator::spectral::SpectralPlan;
use crate::propagator::PhaseSpaceField;
use crate::weyl::{substitute_linear, Frame, LinearSubstitution, WeylPolynomial};

/// Rewrites `poly` in the `(x, p, λx, λp)` frame with the built-in maps.
pub fn to_liouville(poly: &WeylPolynomial) -> Result<WeylPolynomial, InvariantError> {
    let hidden = match poly.frame() {
        Frame::Liouville => return Ok(poly.clone()),
        Frame::Hidden => poly.clone(),
        Frame::Split => substitute_linear(poly, &LinearSubstitution::rotation_inverse())?,
    };
    Ok(substitute_linear(&hidden, &LinearSubstitution::relabel_inverse())?)
}

/// Expectation of a normal-ordered polynomial at the given `ρ, ρ̇, k`.
///
/// Normal order puts `λ` factors to the right, so each monomial acts as
/// `x^a p^b` times the spectral multiplier `κx^c κp^d`.
pub fn polynomial_expectation(
    field: &PhaseSpaceField,
    poly: &WeylPolynomial,
    rho: f64,
    rhodot: f64,
    k: f64,
) -> Result<Complex64, InvariantError> {
    let poly = to_liouville(poly)?;
    let grid = *field.grid();
    let mut plan = SpectralPlan::new(grid);
    let mut spectrum = field.values().to_vec();
    plan.forward2(&mut spectrum);
    let (xs, ps, kx, kp) = (grid.xs(), grid.ps(), grid.kappa_x(), grid.kappa_p());

    let mut groups: BTreeMap<(u32, u32), Vec<(u32, u32, Complex64)>> = BTreeMap::new();
    for (m, c) in poly.terms() {
        groups.entry((m[2], m[3])).or_default().push((m[0], m[1], c.eval(rho, rhodot, k)));
    }

    let mut acc = vec![Complex64::default(); grid.len()];
    let mut phi = vec![Complex64::default(); grid.len()];
    for ((c, d), terms) in groups {
        for (i, a) in kx.iter().enumerate() {
            for (j, b) in kp.iter().enumerate() {
                let n = grid.index(i, j);
                phi[n] = spectrum[n] * a.powi(c as i32) * b.powi(d as i32);
            }
        }
        plan.inverse2(&mut phi);
        for (i, x) in xs.iter().enumerate() {
            for (j, p) in ps.iter().enumerate() {
                let n = grid.index(i, j);
                let w: Complex64 = terms.iter().map(|(a, b, c)| c * x.powi(*a as i32) * p.powi(*b as i32)).sum();
                acc[n] += w * phi[n];
            }
        }
    }
    let total: Complex64 = field.values().iter().zip(&acc).map(|(a, b)| a.conj() * b).sum();
    Ok(total * grid.cell_area())
}
