//! Dormand-Prince 5(4) integrator with embedded error control.
//!
//! The solver works on fixed-size states `[f64; N]` and reports the solution
//! at caller-supplied output times, stepping exactly onto each one. It
//! integrates in either time direction.

use serde::{Deserialize, Serialize};

/// Local error tolerances for [`Dopri5`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub rtol: f64,
    pub atol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { rtol: 1e-10, atol: 1e-12 }
    }
}

/// Why an integration stopped early.
#[derive(Debug, Clone, PartialEq)]
pub enum OdeFailure<E> {
    /// Step size fell below the representable floor near `t`.
    StepUnderflow { t: f64 },
    /// The step budget was exhausted at `t`.
    TooManySteps { t: f64 },
    /// The right-hand side or the state became non-finite after `t`.
    NonFinite { t: f64 },
    /// The caller's guard rejected an accepted step.
    Guard(E),
}

// Butcher tableau.
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

// Difference between the 5th and embedded 4th order weights.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const SAFETY: f64 = 0.9;
const MIN_FACTOR: f64 = 0.2;
const MAX_FACTOR: f64 = 10.0;

/// Adaptive Dormand-Prince 5(4) stepper.
#[derive(Debug, Clone)]
pub struct Dopri5 {
    pub tol: Tolerances,
    /// Upper bound on accepted plus rejected steps per call.
    pub max_steps: usize,
}

impl Default for Dopri5 {
    fn default() -> Self {
        Dopri5 { tol: Tolerances::default(), max_steps: 10_000_000 }
    }
}

fn axpy<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    let mut out = *y;
    for (i, o) in out.iter_mut().enumerate() {
        let mut acc = 0.0;
        for (c, k) in terms {
            acc += c * k[i];
        }
        *o += h * acc;
    }
    out
}

impl Dopri5 {
    pub fn new(tol: Tolerances) -> Self {
        Dopri5 { tol, ..Default::default() }
    }

    fn error_norm<const N: usize>(&self, y: &[f64; N], y_new: &[f64; N], err: &[f64; N]) -> f64 {
        let sum: f64 = (0..N)
            .map(|i| {
                let sc = self.tol.atol + self.tol.rtol * y[i].abs().max(y_new[i].abs());
                (err[i] / sc).powi(2)
            })
            .sum();
        (sum / N as f64).sqrt()
    }

    fn initial_step<const N: usize, F>(&self, f: &mut F, t0: f64, y0: &[f64; N], f0: &[f64; N], dir: f64) -> f64
    where
        F: FnMut(f64, &[f64; N]) -> [f64; N],
    {
        let scale = |i: usize| self.tol.atol + self.tol.rtol * y0[i].abs();
        let norm = |v: &[f64; N]| ((0..N).map(|i| (v[i] / scale(i)).powi(2)).sum::<f64>() / N as f64).sqrt();
        let d0 = norm(y0);
        let d1 = norm(f0);
        let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
        let y1 = axpy(y0, dir * h0, &[(1.0, f0)]);
        let f1 = f(t0 + dir * h0, &y1);
        let diff: [f64; N] = std::array::from_fn(|i| f1[i] - f0[i]);
        let d2 = norm(&diff) / h0;
        let h1 = if d1.max(d2) <= 1e-15 {
            (h0 * 1e-3).max(1e-6)
        } else {
            (0.01 / d1.max(d2)).powf(1.0 / 5.0)
        };
        (100.0 * h0).min(h1)
    }

    /// Integrates `y' = f(t, y)` from `(t0, y0)` and returns the state at every
    /// entry of `times`, which must be monotone in one direction starting at or
    /// beyond `t0`.
    ///
    /// `guard` runs after every accepted step with `(t_prev, y_prev, t, y)`;
    /// returning `Err` aborts the integration.
    pub fn integrate<const N: usize, F, G, E>(
        &self,
        mut f: F,
        t0: f64,
        y0: [f64; N],
        times: &[f64],
        mut guard: G,
    ) -> Result<Vec<[f64; N]>, OdeFailure<E>>
    where
        F: FnMut(f64, &[f64; N]) -> [f64; N],
        G: FnMut(f64, &[f64; N], f64, &[f64; N]) -> Result<(), E>,
    {
        let mut out = Vec::with_capacity(times.len());
        let Some(&t_end) = times.last() else {
            return Ok(out);
        };
        let dir = if t_end >= t0 { 1.0 } else { -1.0 };

        let mut t = t0;
        let mut y = y0;
        let mut k1 = f(t, &y);
        if k1.iter().any(|v| !v.is_finite()) {
            return Err(OdeFailure::NonFinite { t });
        }
        let mut h = self.initial_step(&mut f, t, &y, &k1, dir);
        let mut steps = 0usize;

        for &target in times {
            while dir * (target - t) > 0.0 {
                if steps >= self.max_steps {
                    return Err(OdeFailure::TooManySteps { t });
                }
                steps += 1;

                let remaining = (target - t).abs();
                let h_min = 16.0 * f64::EPSILON * t.abs().max(1e-300);
                if h < h_min {
                    return Err(OdeFailure::StepUnderflow { t });
                }
                // Land exactly on the target; keep the unclipped h for later intervals.
                let last = h >= remaining * (1.0 - 1e-12);
                let hs = if last { remaining } else { h };
                let dh = dir * hs;

                let k2 = f(t + C2 * dh, &axpy(&y, dh, &[(A21, &k1)]));
                let k3 = f(t + C3 * dh, &axpy(&y, dh, &[(A31, &k1), (A32, &k2)]));
                let k4 = f(t + C4 * dh, &axpy(&y, dh, &[(A41, &k1), (A42, &k2), (A43, &k3)]));
                let k5 = f(t + C5 * dh, &axpy(&y, dh, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]));
                let k6 = f(
                    t + dh,
                    &axpy(&y, dh, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]),
                );
                let y_new = axpy(&y, dh, &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)]);
                let t_new = if last { target } else { t + dh };
                let k7 = f(t_new, &y_new);

                let err: [f64; N] = std::array::from_fn(|i| {
                    dh * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i])
                });
                let en = self.error_norm(&y, &y_new, &err);
                if !en.is_finite() || y_new.iter().any(|v| !v.is_finite()) {
                    // Treat as a hard rejection; shrink and retry.
                    h = hs * MIN_FACTOR;
                    if !y.iter().all(|v| v.is_finite()) {
                        return Err(OdeFailure::NonFinite { t });
                    }
                    continue;
                }

                if en <= 1.0 {
                    guard(t, &y, t_new, &y_new).map_err(OdeFailure::Guard)?;
                    t = t_new;
                    y = y_new;
                    k1 = k7;
                    let factor = if en == 0.0 {
                        MAX_FACTOR
                    } else {
                        (SAFETY * en.powf(-0.2)).clamp(MIN_FACTOR, MAX_FACTOR)
                    };
                    let grown = hs * factor;
                    h = if last { h.max(grown).min(h * MAX_FACTOR) } else { grown };
                } else {
                    h = hs * (SAFETY * en.powf(-0.2)).clamp(MIN_FACTOR, 1.0);
                }
            }
            out.push(y);
        }
        Ok(out)
    }
}

/// Guard that never rejects.
pub fn no_guard<const N: usize>(_: f64, _: &[f64; N], _: f64, _: &[f64; N]) -> Result<(), std::convert::Infallible> {
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_decay() {
        let solver = Dopri5::default();
        let times: Vec<f64> = (1..=10).map(|i| i as f64 * 0.5).collect();
        let ys = solver.integrate(|_, y: &[f64; 1]| [-y[0]], 0.0, [1.0], &times, no_guard).unwrap();
        for (t, y) in times.iter().zip(&ys) {
            assert!((y[0] - (-t).exp()).abs() < 1e-11, "t={t} y={}", y[0]);
        }
    }

    #[test]
    fn backward_in_time() {
        let solver = Dopri5::default();
        let ys = solver
            .integrate(|_, y: &[f64; 2]| [y[1], -y[0]], 0.0, [1.0, 0.0], &[-1.0, -2.0], no_guard)
            .unwrap();
        assert!((ys[1][0] - 2f64.cos()).abs() < 1e-10);
        assert!((ys[1][1] - 2f64.sin()).abs() < 1e-10);
    }

    #[test]
    fn output_at_start_time() {
        let solver = Dopri5::default();
        let ys = solver.integrate(|_, y: &[f64; 1]| [y[0]], 0.0, [2.0], &[0.0, 1.0], no_guard).unwrap();
        assert_eq!(ys[0], [2.0]);
    }

    #[test]
    fn guard_aborts() {
        let solver = Dopri5::default();
        let r = solver.integrate(
            |_, y: &[f64; 1]| [y[0]],
            0.0,
            [1.0],
            &[10.0],
            |_, _, t, y: &[f64; 1]| if y[0] > 5.0 { Err(t) } else { Ok(()) },
        );
        match r {
            Err(OdeFailure::Guard(t)) => assert!(t > 1.5 && t < 2.5),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn blow_up_underflows() {
        // y' = y², y(0)=1 blows up at t=1.
        let solver = Dopri5::default();
        let r = solver.integrate(|_, y: &[f64; 1]| [y[0] * y[0]], 0.0, [1.0], &[2.0], no_guard);
        match r {
            Err(OdeFailure::StepUnderflow { t }) | Err(OdeFailure::NonFinite { t }) => {
                assert!((t - 1.0).abs() < 1e-3, "t={t}")
            }
            other => panic!("unexpected {other:?}"),
        }
    }
}
