use std::fmt::Write as _;

use super::ode::{Dopri5, OdeFailure, Tolerances};
use super::{check_grid, ode_failure, DynamicsError, StiffnessProfile};

/// Solutions with `ρ₀ > 0` never reach zero analytically; reaching this floor
/// means the integration itself went wrong.
pub const DEFAULT_RHO_MIN: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErmakovOptions {
    pub tol: Tolerances,
    pub rho_min: f64,
}

impl Default for ErmakovOptions {
    fn default() -> Self {
        ErmakovOptions { tol: Tolerances::default(), rho_min: DEFAULT_RHO_MIN }
    }
}

/// `ρ(t)` and `ρ̇(t)` sampled on a time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ErmakovSolution {
    times: Vec<f64>,
    rho: Vec<f64>,
    rhodot: Vec<f64>,
    profile: StiffnessProfile,
    options: ErmakovOptions,
}

impl ErmakovSolution {
    /// Assembles a solution from raw samples, checking the length and
    /// positivity invariants. Used for externally computed `ρ` series.
    pub fn from_samples(
        profile: StiffnessProfile,
        times: Vec<f64>,
        rho: Vec<f64>,
        rhodot: Vec<f64>,
        options: ErmakovOptions,
    ) -> Result<Self, DynamicsError> {
        check_grid(&times)?;
        if rho.len() != times.len() || rhodot.len() != times.len() {
            return Err(DynamicsError::InvalidArgument("times, rho and rhodot lengths differ".into()));
        }
        if let Some(i) = rho.iter().position(|r| !(*r > 0.0) || !r.is_finite()) {
            return Err(DynamicsError::Singularity { t_cross: times[i], rho_min: options.rho_min });
        }
        Ok(ErmakovSolution { times, rho, rhodot, profile, options })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn rho(&self) -> &[f64] {
        &self.rho
    }

    pub fn rhodot(&self) -> &[f64] {
        &self.rhodot
    }

    pub fn profile(&self) -> &StiffnessProfile {
        &self.profile
    }

    pub fn options(&self) -> &ErmakovOptions {
        &self.options
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// `(t, ρ, ρ̇)` at sample `i`.
    pub fn sample(&self, i: usize) -> (f64, f64, f64) {
        (self.times[i], self.rho[i], self.rhodot[i])
    }

    pub fn min_rho(&self) -> f64 {
        self.rho.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// CSV with header `t,rho,rhodot`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("t,rho,rhodot\n");
        for i in 0..self.len() {
            let _ = writeln!(s, "{},{},{}", self.times[i], self.rho[i], self.rhodot[i]);
        }
        s
    }
}

fn check_rho0(rho0: f64, rhodot0: f64) -> Result<(), DynamicsError> {
    if !(rho0 > 0.0) || !rho0.is_finite() || !rhodot0.is_finite() {
        return Err(DynamicsError::InvalidArgument(format!("need finite rho0 > 0, got rho0 = {rho0}, rhodot0 = {rhodot0}")));
    }
    Ok(())
}

fn floor_crossing(rho_min: f64, t_prev: f64, r_prev: f64, t: f64, r: f64) -> Result<(), f64> {
    if r < rho_min {
        let w = if r_prev > r { ((r_prev - rho_min) / (r_prev - r)).clamp(0.0, 1.0) } else { 1.0 };
        return Err(t_prev + w * (t - t_prev));
    }
    Ok(())
}

fn map_failure(f: OdeFailure<f64>, rho_min: f64) -> DynamicsError {
    match f {
        OdeFailure::Guard(t_cross) => DynamicsError::Singularity { t_cross, rho_min },
        other => ode_failure(other),
    }
}

/// Integrates `ρ̈ = ρ⁻³ - k(t) ρ` from `(times[0], ρ₀, ρ̇₀)`.
pub fn solve_ermakov_direct(
    profile: &StiffnessProfile,
    rho0: f64,
    rhodot0: f64,
    times: &[f64],
) -> Result<ErmakovSolution, DynamicsError> {
    solve_ermakov_direct_with(profile, rho0, rhodot0, times, ErmakovOptions::default())
}

pub fn solve_ermakov_direct_with(
    profile: &StiffnessProfile,
    rho0: f64,
    rhodot0: f64,
    times: &[f64],
    options: ErmakovOptions,
) -> Result<ErmakovSolution, DynamicsError> {
    check_rho0(rho0, rhodot0)?;
    check_grid(times)?;
    profile.check_span(times[0], times[times.len() - 1])?;
    let rho_min = options.rho_min;
    let ys = Dopri5::new(options.tol)
        .integrate(
            |t, y: &[f64; 2]| [y[1], y[0].powi(-3) - profile.eval_unchecked(t) * y[0]],
            times[0],
            [rho0, rhodot0],
            times,
            |tp, yp: &[f64; 2], t, y: &[f64; 2]| floor_crossing(rho_min, tp, yp[0], t, y[0]),
        )
        .map_err(|f| map_failure(f, rho_min))?;
    ErmakovSolution::from_samples(
        profile.clone(),
        times.to_vec(),
        ys.iter().map(|y| y[0]).collect(),
        ys.iter().map(|y| y[1]).collect(),
        options,
    )
}

/// Builds `ρ = √(u² + v²/W²)` from two Hill solutions `u`, `v` with Wronskian
/// `W = u v̇ - u̇ v`, where `u(t₀) = ρ₀, u̇(t₀) = ρ̇₀, v(t₀) = 0, v̇(t₀) = 1`.
pub fn solve_ermakov_pinney(
    profile: &StiffnessProfile,
    rho0: f64,
    rhodot0: f64,
    times: &[f64],
) -> Result<ErmakovSolution, DynamicsError> {
    solve_ermakov_pinney_with(profile, rho0, rhodot0, times, ErmakovOptions::default())
}

pub fn solve_ermakov_pinney_with(
    profile: &StiffnessProfile,
    rho0: f64,
    rhodot0: f64,
    times: &[f64],
    options: ErmakovOptions,
) -> Result<ErmakovSolution, DynamicsError> {
    check_rho0(rho0, rhodot0)?;
    check_grid(times)?;
    profile.check_span(times[0], times[times.len() - 1])?;
    let start = [rho0, rhodot0, 0.0, 1.0];
    let wronskian = start[0] * start[3] - start[1] * start[2];
    if wronskian.abs() < 1e-12 {
        return Err(DynamicsError::DegenerateWronskian { wronskian });
    }
    let ys = Dopri5::new(options.tol)
        .integrate(
            |t, y: &[f64; 4]| {
                let k = profile.eval_unchecked(t);
                [y[1], -k * y[0], y[3], -k * y[2]]
            },
            times[0],
            start,
            times,
            super::ode::no_guard,
        )
        .map_err(ode_failure)?;

    let w2 = wronskian * wronskian;
    let mut rho = Vec::with_capacity(ys.len());
    let mut rhodot = Vec::with_capacity(ys.len());
    for (i, y) in ys.iter().enumerate() {
        let [u, ud, v, vd] = *y;
        let r = (u * u + v * v / w2).sqrt();
        if r < options.rho_min {
            return Err(DynamicsError::Singularity { t_cross: times[i], rho_min: options.rho_min });
        }
        rho.push(r);
        rhodot.push((u * ud + v * vd / w2) / r);
    }
    ErmakovSolution::from_samples(profile.clone(), times.to_vec(), rho, rhodot, options)
}

/// Second derivative at `nodes[at]` of the polynomial interpolating `values`
/// on `nodes` (Newton divided differences, any spacing; exact on constants).
fn interp_second_derivative(nodes: &[f64], values: &[f64], at: usize) -> f64 {
    let n = nodes.len();
    let x = nodes[at];
    let mut dd = values.to_vec();
    let mut total = 0.0;
    for order in 1..n {
        for j in (order..n).rev() {
            dd[j] = (dd[j] - dd[j - 1]) / (nodes[j] - nodes[j - order]);
        }
        // d²/dx² of Π_{m<order} (x - x_m)
        let mut second = 0.0;
        for a in 0..order {
            for b in 0..order {
                if a != b {
                    second += (0..order).filter(|&m| m != a && m != b).map(|m| x - nodes[m]).product::<f64>();
                }
            }
        }
        total += dd[order] * second;
    }
    total
}

/// Pointwise `|ρ̈ + k ρ - ρ⁻³|` with `ρ̈` from a three-point centered stencil
/// (four-point one-sided at the ends) on the stored grid.
pub fn ermakov_residual(sol: &ErmakovSolution) -> Result<Vec<f64>, DynamicsError> {
    let n = sol.len();
    if n < 5 {
        return Err(DynamicsError::InvalidArgument(format!("residual needs at least 5 samples, got {n}")));
    }
    let t = sol.times();
    let r = sol.rho();
    (0..n)
        .map(|i| {
            let rdd = match i {
                0 => interp_second_derivative(&t[0..4], &r[0..4], 0),
                i if i == n - 1 => interp_second_derivative(&t[n - 4..], &r[n - 4..], 3),
                i => interp_second_derivative(&t[i - 1..=i + 1], &r[i - 1..=i + 1], 1),
            };
            let k = sol.profile().eval(t[i])?;
            Ok((rdd + k * r[i] - r[i].powi(-3)).abs())
        })
        .collect()
}
