use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::operator::{build_split_operator, InvariantEvaluator};
use super::InvariantError;
use crate::dynamics::{
    solve_ermakov_direct_with, solve_hill_with, ClassicalState, ErmakovOptions, StiffnessProfile,
};
use crate::propagator::{propagate, step_count, Gaussian, PhaseSpaceGrid};

/// Which auxiliary function parametrizes `Î` during a study.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RhoSource {
    /// `ρ̈ + kρ = ρ⁻³`.
    #[default]
    Ermakov,
    /// `ρ̈ + kρ = 0`, a deliberately wrong choice; the series stops at the
    /// first sample with `ρ ≤ 0`.
    Linear,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyConfig {
    pub grid: PhaseSpaceGrid,
    pub center: ClassicalState,
    pub widths: (f64, f64),
    pub profile: StiffnessProfile,
    pub rho0: f64,
    pub rhodot0: f64,
    pub t1: f64,
    pub dt: f64,
    pub stride: usize,
    pub rho_source: RhoSource,
}

/// Time series of a KvN run and its conservation metrics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvariantReport {
    pub times: Vec<f64>,
    pub norm: Vec<f64>,
    pub mean_x: Vec<f64>,
    pub mean_p: Vec<f64>,
    pub expect_i: Vec<f64>,
    pub var_i: Vec<f64>,
    pub rho: Vec<f64>,
    pub rhodot: Vec<f64>,
    /// `max |⟨Î⟩(t) - ⟨Î⟩(0)| / ⟨Î⟩(0)`.
    pub max_rel_drift_i: f64,
    /// Relative drift of `Var(Î)`; absolute when the initial variance is
    /// below [`VARIANCE_FLOOR`].
    pub max_rel_drift_var: f64,
    pub var_drift_relative: bool,
    pub max_norm_drift: f64,
    pub max_boundary_mass: f64,
    /// First time at which `ρ ≤ 0` cut the series short.
    pub truncated_at: Option<f64>,
}

/// Initial variances below this are compared absolutely.
pub const VARIANCE_FLOOR: f64 = 1e-10;

pub(crate) fn max_drift(series: &[f64]) -> f64 {
    let v0 = series.first().copied().unwrap_or(0.0);
    series.iter().map(|v| (v - v0).abs()).fold(0.0, f64::max)
}

impl InvariantReport {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Columns `t,norm,expect_I,var_I`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,norm,expect_I,var_I\n");
        for i in 0..self.len() {
            let _ = writeln!(out, "{},{},{},{}", self.times[i], self.norm[i], self.expect_i[i], self.var_i[i]);
        }
        out
    }

    fn finish(&mut self) {
        let i0 = self.expect_i.first().copied().unwrap_or(0.0);
        self.max_rel_drift_i = if i0 > 0.0 { max_drift(&self.expect_i) / i0 } else { max_drift(&self.expect_i) };
        let v0 = self.var_i.first().copied().unwrap_or(0.0);
        self.var_drift_relative = v0.abs() > VARIANCE_FLOOR;
        let dv = max_drift(&self.var_i);
        self.max_rel_drift_var = if self.var_drift_relative { dv / v0.abs() } else { dv };
        self.max_norm_drift = self.norm.iter().map(|n| (n - 1.0).abs()).fold(0.0, f64::max);
    }
}

/// Observation times of a run: every `stride` steps plus the end point.
fn observation_times(t0: f64, t1: f64, n: usize, stride: usize) -> Vec<f64> {
    let dt = (t1 - t0) / n as f64;
    let mut times: Vec<f64> = (0..n).step_by(stride).map(|s| t0 + s as f64 * dt).collect();
    times.push(t1);
    times
}

/// `ρ, ρ̇` on `times`, cut at the first nonpositive `ρ` for the linear source.
fn rho_series(config: &StudyConfig, times: &[f64]) -> Result<(Vec<f64>, Vec<f64>, Option<f64>), InvariantError> {
    let opts = ErmakovOptions::default();
    match config.rho_source {
        RhoSource::Ermakov => {
            let sol = solve_ermakov_direct_with(&config.profile, config.rho0, config.rhodot0, times, opts)?;
            Ok((sol.rho().to_vec(), sol.rhodot().to_vec(), None))
        }
        RhoSource::Linear => {
            let path = solve_hill_with(&config.profile, ClassicalState::new(config.rho0, config.rhodot0), times, opts.tol)?;
            let cut = path.iter().position(|s| s.q <= 0.0);
            let keep = cut.unwrap_or(path.len());
            Ok((
                path[..keep].iter().map(|s| s.q).collect(),
                path[..keep].iter().map(|s| s.p).collect(),
                cut.map(|i| times[i]),
            ))
        }
    }
}

/// Co-evolves `ψ` and `ρ` and records `⟨Î⟩`, `Var(Î)` and the norm at every
/// observation.
pub fn run_invariant_study(config: &StudyConfig) -> Result<InvariantReport, InvariantError> {
    let grid = config.grid;
    let gaussian = Gaussian::on_grid(&grid, config.center, config.widths)?;
    let field0 = gaussian.sample(&grid);
    let n = step_count(config.t1, config.dt).ok_or_else(|| {
        InvariantError::InvalidArgument(format!("dt = {} does not divide t1 = {}", config.dt, config.t1))
    })?;
    if config.stride == 0 {
        return Err(InvariantError::InvalidArgument("observer stride must be at least 1".into()));
    }
    let times = observation_times(0.0, config.t1, n, config.stride);
    let (rho, rhodot, truncated_at) =
        rho_series(config, &times).map_err(|e| InvariantError::Stage { stage: "rho", message: e.to_string() })?;
    let mut evaluator = InvariantEvaluator::new(grid)?;
    let mut report = InvariantReport {
        times: Vec::new(),
        norm: Vec::new(),
        mean_x: Vec::new(),
        mean_p: Vec::new(),
        expect_i: Vec::new(),
        var_i: Vec::new(),
        rho: Vec::new(),
        rhodot: Vec::new(),
        max_rel_drift_i: 0.0,
        max_rel_drift_var: 0.0,
        var_drift_relative: false,
        max_norm_drift: 0.0,
        max_boundary_mass: 0.0,
        truncated_at,
    };
    // The linear source may end early; propagate only as far as it reaches.
    let usable = rho.len();
    if usable == 0 {
        return Err(InvariantError::InvalidArgument("rho is nonpositive at the start".into()));
    }
    let t_end = times[usable - 1];
    let mut next = 0usize;
    let mut observer = |f: &crate::propagator::PhaseSpaceField| -> Result<(), String> {
        let op = build_split_operator(&grid, rho[next], rhodot[next]).map_err(|e| e.to_string())?;
        let (mean, var) = evaluator.expectation_and_variance(f, &op).map_err(|e| e.to_string())?;
        let m = f.moments();
        report.times.push(times[next]);
        report.norm.push(f.norm());
        report.mean_x.push(m.mean_x);
        report.mean_p.push(m.mean_p);
        report.expect_i.push(mean);
        report.var_i.push(var);
        report.rho.push(rho[next]);
        report.rhodot.push(rhodot[next]);
        next += 1;
        Ok(())
    };
    let max_boundary_mass = if usable == 1 {
        observer(&field0).map_err(|message| InvariantError::Stage { stage: "observe", message })?;
        field0.outer_ring_mass()
    } else {
        let steps = ((usable - 1) * config.stride).min(n);
        let span_end = if steps == n { config.t1 } else { t_end };
        let out = propagate(field0, &config.profile, span_end, config.t1 / n as f64, config.stride, &mut observer)
            .map_err(|e| InvariantError::Stage { stage: "propagate", message: e.to_string() })?;
        out.max_boundary_mass
    };
    report.max_boundary_mass = max_boundary_mass;
    report.finish();
    Ok(report)
}
