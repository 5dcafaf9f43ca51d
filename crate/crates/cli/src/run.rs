//! Executes a validated configuration and writes its artifacts.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::time::Instant;

use kvn_ermakov::dynamics::{
    ermakov_residual, solve_ermakov_direct_with, solve_ermakov_pinney_with, ClassicalState, ErmakovOptions,
    ErmakovSolution, StiffnessProfile,
};
use kvn_ermakov::invariant::{classical_drift, run_invariant_study, InvariantReport, StudyConfig};
use kvn_ermakov::propagator::PhaseSpaceGrid;
use kvn_ermakov::weyl::{
    build_hamiltonian, build_invariant, build_sub_hamiltonian, invariance_defect, parse_operator, substitute_linear,
    verify_canonical, Frame, InvariantForm, LinearSubstitution, WeylPolynomial,
};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::config::{ClassicalConfig, ErmakovConfig, KvnConfig, RunConfig, Study, SymcheckConfig, IDENTITIES};
use crate::emit::{emit_plotdata, write_artifact, Report};
use crate::rng::{sample_states, RNG_ALGORITHM};
use crate::CliError;

pub const SUMMARY_FILE: &str = "summary.json";
pub const FAILED_FILE: &str = "FAILED";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Assertion {
    pub name: String,
    pub passed: bool,
    pub value: f64,
    pub threshold: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

impl Assertion {
    /// Passes when `value <= threshold`.
    pub fn at_most(name: &str, value: f64, threshold: f64) -> Self {
        Assertion { name: name.into(), passed: value <= threshold, value, threshold, detail: None }
    }

    /// Passes when `value >= threshold`.
    pub fn at_least(name: &str, value: f64, threshold: f64) -> Self {
        Assertion { name: name.into(), passed: value >= threshold, value, threshold, detail: None }
    }

    fn with_detail(mut self, detail: impl Into<String>) -> Self {
        self.detail = Some(detail.into());
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub command: String,
    pub parameters: Value,
    pub passed: bool,
    pub assertions: Vec<Assertion>,
    pub metrics: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rng: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub wall_clock_s: f64,
    pub artifacts: Vec<String>,
}

/// What a study produced before any error stopped it.
#[derive(Debug, Default)]
pub(crate) struct Outcome {
    pub assertions: Vec<Assertion>,
    pub metrics: BTreeMap<String, f64>,
    pub artifacts: Vec<String>,
    pub rng: Option<String>,
}

impl Outcome {
    fn metric(&mut self, name: &str, value: f64) {
        self.metrics.insert(name.into(), value);
    }

    fn wrote(&mut self, files: impl IntoIterator<Item = String>) {
        self.artifacts.extend(files);
    }
}

fn stage<E: std::fmt::Display>(name: &'static str) -> impl Fn(E) -> CliError {
    move |e| CliError::Study { stage: name, message: e.to_string() }
}

/// `t0, t0 + dt, ..., t1` with the last point exactly `t1`.
pub(crate) fn uniform_times(t0: f64, t1: f64, dt: f64) -> Vec<f64> {
    let n = ((t1 - t0) / dt).round().max(1.0) as usize;
    (0..=n).map(|i| if i == n { t1 } else { t0 + (t1 - t0) * i as f64 / n as f64 }).collect()
}

/// Runs `config`, writing artifacts, `summary.json` and, unless every
/// assertion passed, a `FAILED` marker into `out`.
///
/// Study failures do not make this return `Err`: they are recorded in the
/// summary, and whatever artifacts were written before the failure stay.
/// `Err` means the output directory itself could not be written.
pub fn run(config: &RunConfig, out: &Path) -> Result<RunSummary, CliError> {
    let started = Instant::now();
    fs::create_dir_all(out).map_err(|source| CliError::Io { path: out.into(), source })?;
    let marker = out.join(FAILED_FILE);
    if marker.exists() {
        fs::remove_file(&marker).map_err(|source| CliError::Io { path: marker.clone(), source })?;
    }
    let mut outcome = Outcome::default();
    let result = match &config.study {
        Study::Ermakov(c) => ermakov_study(&config.profile, c, out, &mut outcome),
        Study::Classical(c) => classical_study(&config.profile, c, out, &mut outcome),
        Study::Kvn(c) => kvn_study(&config.profile, c, out, &mut outcome),
        Study::Symcheck(c) => symcheck_study(c, out, &mut outcome),
    };
    let error = match result {
        Ok(()) => None,
        Err(e @ CliError::Io { .. }) => return Err(e),
        Err(e) => Some(e.to_string()),
    };
    let passed = error.is_none() && !outcome.assertions.is_empty() && outcome.assertions.iter().all(|a| a.passed);
    outcome.artifacts.push(SUMMARY_FILE.into());
    let summary = RunSummary {
        command: config.command().to_string(),
        parameters: config.to_json(),
        passed,
        assertions: outcome.assertions,
        metrics: outcome.metrics,
        rng: outcome.rng,
        error,
        wall_clock_s: started.elapsed().as_secs_f64(),
        artifacts: outcome.artifacts,
    };
    finish(out, &summary)?;
    Ok(summary)
}

/// Writes `summary.json` and the failure marker.
pub(crate) fn finish<S: Serialize>(out: &Path, summary: &S) -> Result<(), CliError> {
    let value = serde_json::to_value(summary).map_err(|e| CliError::Study { stage: "summary", message: e.to_string() })?;
    write_artifact(out, SUMMARY_FILE, &(serde_json::to_string_pretty(&value).expect("json value prints") + "\n"))?;
    if value["passed"] != Value::Bool(true) {
        let mut reasons = String::new();
        if let Some(e) = value["error"].as_str() {
            let _ = writeln!(reasons, "error: {e}");
        }
        let checks = ["assertions", "criteria"].into_iter().flat_map(|k| value[k].as_array().into_iter().flatten());
        for a in checks.filter(|a| a["passed"] != Value::Bool(true)) {
            let name = a["name"].as_str().or(a["title"].as_str()).unwrap_or("?");
            let _ = writeln!(reasons, "failed: {name}");
        }
        write_artifact(out, FAILED_FILE, &reasons)?;
    }
    Ok(())
}

fn ermakov_options(c: &ErmakovConfig) -> ErmakovOptions {
    ErmakovOptions { tol: c.tol, rho_min: c.rho_min }
}

fn ermakov_study(profile: &StiffnessProfile, c: &ErmakovConfig, out: &Path, o: &mut Outcome) -> Result<(), CliError> {
    let times = uniform_times(c.t0, c.t1, c.dt);
    let opts = ermakov_options(c);
    let direct = solve_ermakov_direct_with(profile, c.rho0, c.rhodot0, &times, opts).map_err(stage("ermakov direct"))?;
    o.wrote([write_artifact(out, "ermakov.csv", &direct.to_csv())?]);
    o.wrote(emit_plotdata(Report::Ermakov(&direct), out)?);
    o.metric("min_rho", direct.min_rho());
    o.metric("max_rho", direct.rho().iter().copied().fold(0.0, f64::max));
    o.assertions.push(Assertion::at_least("positivity", direct.min_rho(), c.rho_min));

    let keep = times.iter().take_while(|t| **t <= c.residual_until + 0.5 * c.dt).count();
    let window = ErmakovSolution::from_samples(
        profile.clone(),
        times[..keep].to_vec(),
        direct.rho()[..keep].to_vec(),
        direct.rhodot()[..keep].to_vec(),
        opts,
    )
    .map_err(stage("residual"))?;
    let residual = ermakov_residual(&window).map_err(stage("residual"))?;
    let worst = residual.iter().copied().fold(0.0, f64::max);
    o.metric("max_residual", worst);
    o.assertions.push(
        Assertion::at_most("residual", worst, c.max_residual).with_detail(format!("t in [{}, {}]", c.t0, times[keep - 1])),
    );

    let pinney = solve_ermakov_pinney_with(profile, c.rho0, c.rhodot0, &times, opts).map_err(stage("ermakov pinney"))?;
    let gap = direct.rho().iter().zip(pinney.rho()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    o.metric("max_pinney_gap", gap);
    o.assertions.push(Assertion::at_most("pinney-agreement", gap, c.max_pinney_gap));
    Ok(())
}

/// Drift of the classical invariant for `count` seeded states; one CSV row
/// per trajectory.
fn classical_study(profile: &StiffnessProfile, c: &ClassicalConfig, out: &Path, o: &mut Outcome) -> Result<(), CliError> {
    o.rng = Some(RNG_ALGORITHM.into());
    let states = sample_states(c.seed, c.count, &c.sample_box);
    let times = uniform_times(0.0, c.t1, c.dt);
    let opts = ErmakovOptions::default();
    let ermakov = solve_ermakov_direct_with(profile, c.rho0, c.rhodot0, &times, opts).map_err(stage("ermakov"))?;
    let drifts = classical_drift(profile, &states, &ermakov).map_err(stage("classical drift"))?;
    let mut csv = String::from("index,q0,p0,invariant0,drift,relative\n");
    for (i, d) in drifts.iter().enumerate() {
        let _ = writeln!(csv, "{i},{},{},{},{},{}", d.initial.q, d.initial.p, d.invariant0, d.drift, d.relative);
    }
    o.wrote([write_artifact(out, "classical_drift.csv", &csv)?]);
    let worst = drifts.iter().map(|d| d.drift).fold(0.0, f64::max);
    o.metric("trajectories", drifts.len() as f64);
    o.metric("max_drift", worst);
    o.assertions.push(Assertion::at_most("invariant-drift", worst, c.max_drift).with_detail(format!("{} trajectories", drifts.len())));
    Ok(())
}

pub(crate) fn study_config(profile: &StiffnessProfile, c: &KvnConfig) -> Result<StudyConfig, CliError> {
    let grid = PhaseSpaceGrid::new(c.grid.nx, c.grid.np, c.grid.lx, c.grid.lp).map_err(stage("grid"))?;
    Ok(StudyConfig {
        grid,
        center: ClassicalState::new(c.initial.x0, c.initial.p0),
        widths: (c.initial.sx, c.initial.sp),
        profile: profile.clone(),
        rho0: c.rho0,
        rhodot0: c.rhodot0,
        t1: c.t1,
        dt: c.dt,
        stride: c.observe_stride,
        rho_source: c.rho_source,
    })
}

fn observables_csv(r: &InvariantReport) -> String {
    let mut csv = String::from("t,norm,mean_x,mean_p,expect_I,var_I\n");
    for i in 0..r.len() {
        let _ = writeln!(csv, "{},{},{},{},{},{}", r.times[i], r.norm[i], r.mean_x[i], r.mean_p[i], r.expect_i[i], r.var_i[i]);
    }
    csv
}

/// The conservation checks a KvN run is held to.
pub(crate) fn kvn_assertions(r: &InvariantReport, c: &KvnConfig) -> Vec<Assertion> {
    let mut v = vec![
        Assertion::at_most("expectation-drift", r.max_rel_drift_i, c.max_drift_i),
        Assertion::at_most("variance-drift", r.max_rel_drift_var, c.max_drift_var)
            .with_detail(if r.var_drift_relative { "relative" } else { "absolute" }),
        Assertion::at_most("norm-drift", r.max_norm_drift, c.max_norm_drift),
        Assertion::at_most("boundary-mass", r.max_boundary_mass, c.max_boundary_mass),
    ];
    if let Some(t) = r.truncated_at {
        v.push(Assertion {
            name: "rho-positive".into(),
            passed: false,
            value: t,
            threshold: c.t1,
            detail: Some(format!("rho reached zero at t = {t}")),
        });
    }
    v
}

fn kvn_study(profile: &StiffnessProfile, c: &KvnConfig, out: &Path, o: &mut Outcome) -> Result<(), CliError> {
    let report = run_invariant_study(&study_config(profile, c)?).map_err(stage("kvn study"))?;
    o.wrote([
        write_artifact(out, "observables.csv", &observables_csv(&report))?,
        write_artifact(out, "invariant_report.csv", &report.to_csv())?,
    ]);
    o.wrote(emit_plotdata(Report::Invariant(&report), out)?);
    o.metric("max_rel_drift_I", report.max_rel_drift_i);
    o.metric("max_rel_drift_var", report.max_rel_drift_var);
    o.metric("max_norm_drift", report.max_norm_drift);
    o.metric("max_boundary_mass", report.max_boundary_mass);
    if let (Some(i0), Some(v0)) = (report.expect_i.first(), report.var_i.first()) {
        o.metric("expect_I0", *i0);
        o.metric("var_I0", *v0);
    }
    o.assertions.extend(kvn_assertions(&report, c));
    Ok(())
}

/// One symbolic check: passes when the printed defect is `0`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolicCheck {
    pub name: String,
    pub defect: String,
}

impl SymbolicCheck {
    fn difference(name: impl Into<String>, lhs: &WeylPolynomial, rhs: &WeylPolynomial) -> Result<Self, CliError> {
        Ok(SymbolicCheck { name: name.into(), defect: lhs.sub(rhs).map_err(stage("symcheck"))?.to_string() })
    }

    pub fn passed(&self) -> bool {
        self.defect == "0"
    }
}

fn frame_name(f: Frame) -> &'static str {
    match f {
        Frame::Hidden => "hidden",
        Frame::Split => "split",
        Frame::Liouville => "liouville",
    }
}

fn canonical(name: &str, maps: [LinearSubstitution; 2]) -> Vec<SymbolicCheck> {
    maps.iter()
        .map(|m| {
            let report = verify_canonical(m);
            let defect = if report.canonical {
                "0".to_string()
            } else {
                report
                    .defects
                    .iter()
                    .map(|d| format!("[{}, {}] = {} (expected {})", d.left, d.right, d.found, d.expected))
                    .collect::<Vec<_>>()
                    .join("; ")
            };
            SymbolicCheck { name: format!("{name}[{}]", m.name), defect }
        })
        .collect()
}

/// Evaluates one built-in identity.
pub fn symbolic_identity(identity: &str) -> Result<Vec<SymbolicCheck>, CliError> {
    let defect = |name: String, form: InvariantForm, h: WeylPolynomial, sign: i8| -> Result<SymbolicCheck, CliError> {
        let d = invariance_defect(&build_invariant(form), &h, sign).map_err(stage("symcheck"))?;
        Ok(SymbolicCheck { name, defect: d.to_string() })
    };
    let sub = |p: &WeylPolynomial, m: LinearSubstitution| substitute_linear(p, &m).map_err(stage("symcheck"));
    match identity {
        "invariance-i1" => Ok(vec![defect(identity.into(), InvariantForm::I1, build_sub_hamiltonian(1), 1)?]),
        "invariance-i2" => Ok(vec![defect(identity.into(), InvariantForm::I2, build_sub_hamiltonian(2), -1)?]),
        "invariance-total" => [InvariantForm::TotalSplit, InvariantForm::TotalHidden, InvariantForm::TotalLiouville]
            .into_iter()
            .map(|f| defect(format!("{identity}[{}]", frame_name(f.frame())), f, build_hamiltonian(f.frame()), 1))
            .collect(),
        "hamiltonian-split" => {
            let split = sub(&build_hamiltonian(Frame::Hidden), LinearSubstitution::rotation())?;
            Ok(vec![SymbolicCheck::difference(identity, &split, &build_hamiltonian(Frame::Split))?])
        }
        "canonical-rotation" => Ok(canonical(identity, [LinearSubstitution::rotation(), LinearSubstitution::rotation_inverse()])),
        "canonical-relabel" => Ok(canonical(identity, [LinearSubstitution::relabel(), LinearSubstitution::relabel_inverse()])),
        "form-equality" => {
            let split = build_invariant(InvariantForm::TotalSplit);
            let hidden = build_invariant(InvariantForm::TotalHidden);
            let liouville = build_invariant(InvariantForm::TotalLiouville);
            Ok(vec![
                SymbolicCheck::difference(
                    format!("{identity}[split->hidden]"),
                    &sub(&split, LinearSubstitution::rotation_inverse())?,
                    &hidden,
                )?,
                SymbolicCheck::difference(
                    format!("{identity}[hidden->liouville]"),
                    &sub(&hidden, LinearSubstitution::relabel_inverse())?,
                    &liouville,
                )?,
                SymbolicCheck::difference(
                    format!("{identity}[liouville->hidden]"),
                    &sub(&liouville, LinearSubstitution::relabel())?,
                    &hidden,
                )?,
                SymbolicCheck::difference(
                    format!("{identity}[hidden->split]"),
                    &sub(&hidden, LinearSubstitution::rotation())?,
                    &split,
                )?,
            ])
        }
        other => Err(CliError::Study { stage: "symcheck", message: format!("unknown identity {other:?}") }),
    }
}

fn custom_check(c: &SymcheckConfig) -> Result<SymbolicCheck, CliError> {
    let text = c.invariant.as_deref().unwrap_or_default();
    let inv = parse_operator(text).map_err(stage("parse invariant"))?;
    let h = match &c.hamiltonian {
        Some(h) => parse_operator(h).map_err(stage("parse hamiltonian"))?,
        None => build_hamiltonian(inv.frame()),
    };
    let d = invariance_defect(&inv, &h, c.sign).map_err(stage("symcheck"))?;
    Ok(SymbolicCheck { name: "custom".into(), defect: d.to_string() })
}

fn symcheck_study(c: &SymcheckConfig, out: &Path, o: &mut Outcome) -> Result<(), CliError> {
    let checks = match c.identity.as_str() {
        "custom" => vec![custom_check(c)?],
        "all" => IDENTITIES.iter().map(|id| symbolic_identity(id)).collect::<Result<Vec<_>, _>>()?.concat(),
        id => symbolic_identity(id)?,
    };
    let mut csv = String::from("identity,passed,defect\n");
    for ch in &checks {
        let _ = writeln!(csv, "{},{},{}", ch.name, ch.passed(), ch.defect);
        o.assertions.push(Assertion {
            name: ch.name.clone(),
            passed: ch.passed(),
            value: if ch.passed() { 0.0 } else { 1.0 },
            threshold: 0.0,
            detail: Some(ch.defect.clone()),
        });
    }
    o.wrote([write_artifact(out, "symcheck.csv", &csv)?]);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_times_hit_both_ends() {
        let t = uniform_times(0.0, 1.0, 0.1);
        assert_eq!(t.len(), 11);
        assert_eq!(t[0], 0.0);
        assert_eq!(t[10], 1.0);
    }

    #[test]
    fn every_identity_holds() {
        for id in IDENTITIES {
            for ch in symbolic_identity(id).unwrap() {
                assert!(ch.passed(), "{}: {}", ch.name, ch.defect);
            }
        }
        assert!(symbolic_identity("nope").is_err());
    }

    #[test]
    fn custom_check_reports_nonzero_defect() {
        let c = SymcheckConfig { identity: "custom".into(), invariant: Some("q1^2".into()), hamiltonian: None, sign: 1 };
        let ch = custom_check(&c).unwrap();
        assert!(!ch.passed());
        let c = SymcheckConfig {
            identity: "custom".into(),
            invariant: Some("p1^2 + k*q1^2".into()),
            hamiltonian: Some("p1^2/2 + k*q1^2/2".into()),
            sign: 1,
        };
        // k is constant in the algebra, so the energy of the first pair is conserved
        assert!(custom_check(&c).unwrap().passed());
    }
}
