//! The bundled acceptance suite behind `kvn-lab all`.
//!
//! Each criterion runs at its stated tolerance and reports one verdict.
//! Criterion 8 is a negative control: it passes when the invariant built
//! from the wrong auxiliary equation is seen to drift, i.e. when the KvN
//! run's own assertions reject that configuration.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use kvn_ermakov::dynamics::{
    solve_ermakov_direct, solve_ermakov_pinney, ClassicalState, ErmakovSolution, StiffnessProfile,
};
use kvn_ermakov::invariant::{run_invariant_study, RhoSource, StudyConfig};
use kvn_ermakov::propagator::{propagate, solve_characteristics, Gaussian, InitialCondition, PhaseSpaceGrid, SplitStepper};
use serde::Serialize;

use crate::config::{ClassicalConfig, KvnConfig, SampleBox, GridBlock, InitialBlock, IDENTITIES};
use crate::emit::write_artifact;
use crate::run::{finish, kvn_assertions, study_config, symbolic_identity, uniform_times};
use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriterionResult {
    pub id: u8,
    pub title: &'static str,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

impl CriterionResult {
    /// `PASS 3 form equality (0.01 s): ...`
    pub fn line(&self) -> String {
        format!(
            "{} {} {} ({:.2} s): {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.title,
            self.seconds,
            self.detail
        )
    }
}

struct Verdict {
    passed: bool,
    detail: String,
}

impl Verdict {
    fn new(passed: bool, detail: String) -> Self {
        Verdict { passed, detail }
    }
}

type Criterion = fn() -> Result<Verdict, CliError>;

pub const CRITERIA: [(u8, &str); 8] = [
    (1, "invariance defect is exactly zero"),
    (2, "hamiltonian splits under canonical maps"),
    (3, "invariant forms agree"),
    (4, "ermakov solver"),
    (5, "classical conservation"),
    (6, "kvn propagator"),
    (7, "kvn invariant conservation"),
    (8, "negative control"),
];

fn mathieu() -> StiffnessProfile {
    StiffnessProfile::mathieu(1.0, 0.5, 2.0)
}

fn err<E: std::fmt::Display>(stage: &'static str) -> impl Fn(E) -> CliError {
    move |e| CliError::Study { stage, message: e.to_string() }
}

fn symbolic(ids: &[&str]) -> Result<Verdict, CliError> {
    let mut failed = Vec::new();
    let mut n = 0;
    for id in ids {
        for ch in symbolic_identity(id)? {
            n += 1;
            if !ch.passed() {
                failed.push(format!("{} = {}", ch.name, ch.defect));
            }
        }
    }
    Ok(if failed.is_empty() {
        Verdict::new(true, format!("{n} checks, all defects 0"))
    } else {
        Verdict::new(false, failed.join("; "))
    })
}

fn criterion_1() -> Result<Verdict, CliError> {
    symbolic(&["invariance-i1", "invariance-i2", "invariance-total"])
}

fn criterion_2() -> Result<Verdict, CliError> {
    symbolic(&["hamiltonian-split", "canonical-rotation", "canonical-relabel"])
}

fn criterion_3() -> Result<Verdict, CliError> {
    symbolic(&["form-equality"])
}

fn max_abs_diff(a: &[f64], b: impl Fn(usize) -> f64) -> f64 {
    a.iter().enumerate().map(|(i, v)| (v - b(i)).abs()).fold(0.0, f64::max)
}

fn criterion_4() -> Result<Verdict, CliError> {
    let times = uniform_times(0.0, 20.0, 1e-2);
    let mut eq = 0.0f64;
    for k in [1.0, 4.0] {
        let r = f64::powf(k, -0.25);
        let s = solve_ermakov_direct(&StiffnessProfile::constant(k), r, 0.0, &times).map_err(err("equilibrium"))?;
        eq = eq.max(max_abs_diff(s.rho(), |_| r));
    }
    let direct = solve_ermakov_direct(&mathieu(), 1.0, 0.0, &times).map_err(err("direct"))?;
    let pinney = solve_ermakov_pinney(&mathieu(), 1.0, 0.0, &times).map_err(err("pinney"))?;
    let gap = max_abs_diff(direct.rho(), |i| pinney.rho()[i]);
    let closed = |s: &ErmakovSolution| (s.rho()[s.len() - 1] - 0.5).abs();
    let quarter = [0.0, PI / 2.0];
    let unit = StiffnessProfile::constant(1.0);
    let c_direct = closed(&solve_ermakov_direct(&unit, 2.0, 0.0, &quarter).map_err(err("closed form"))?);
    let c_pinney = closed(&solve_ermakov_pinney(&unit, 2.0, 0.0, &quarter).map_err(err("closed form"))?);
    let passed = eq <= 1e-9 && gap <= 1e-8 && c_direct <= 1e-8 && c_pinney <= 1e-8;
    Ok(Verdict::new(
        passed,
        format!(
            "equilibrium {eq:.1e} (<= 1e-9), pinney gap {gap:.1e} (<= 1e-8), rho(pi/2) error {:.1e} (<= 1e-8)",
            c_direct.max(c_pinney)
        ),
    ))
}

fn criterion_5() -> Result<Verdict, CliError> {
    let c = ClassicalConfig {
        seed: 42,
        count: 100,
        sample_box: SampleBox::default(),
        rho0: 1.0,
        rhodot0: 0.0,
        t1: 20.0,
        dt: 1e-2,
        max_drift: 1e-7,
    };
    let states = crate::rng::sample_states(c.seed, c.count, &c.sample_box);
    let times = uniform_times(0.0, c.t1, c.dt);
    let ermakov = solve_ermakov_direct(&mathieu(), c.rho0, c.rhodot0, &times).map_err(err("ermakov"))?;
    let drifts = kvn_ermakov::invariant::classical_drift(&mathieu(), &states, &ermakov).map_err(err("classical drift"))?;
    let worst = drifts.iter().map(|d| d.drift).fold(0.0, f64::max);
    Ok(Verdict::new(worst <= c.max_drift, format!("{} trajectories, max drift {worst:.1e} (<= 1e-7)", drifts.len())))
}

fn gaussian(grid: &PhaseSpaceGrid, x0: f64) -> Result<Gaussian, CliError> {
    Gaussian::on_grid(grid, ClassicalState::new(x0, 0.0), (1.0, 1.0)).map_err(err("initial gaussian"))
}

fn criterion_6() -> Result<Verdict, CliError> {
    let small = PhaseSpaceGrid::new(64, 64, 8.0, 8.0).map_err(err("grid"))?;
    let mut f = gaussian(&small, 1.0)?.sample(&small);
    SplitStepper::new(small).steps(&mut f, &mathieu(), 10_000, 1e-3).map_err(err("norm run"))?;
    let norm_drift = (f.norm() - 1.0).abs();

    let g = PhaseSpaceGrid::new(256, 256, 8.0, 8.0).map_err(err("grid"))?;
    let f0 = gaussian(&g, 1.0)?.sample(&g);
    let out = propagate(f0.clone(), &StiffnessProfile::constant(1.0), 2.0 * PI, 2.0 * PI / 1000.0, 1000, |_| Ok(()))
        .map_err(err("return map"))?;
    let mut back = out.field;
    back.set_time(0.0);
    let ret = back.linf_distance(&f0).map_err(err("return map"))?;

    // The Mathieu field stretches along the resonance; a wider box keeps it
    // away from the periodic edge.
    let wide = PhaseSpaceGrid::new(256, 256, 20.0, 20.0).map_err(err("grid"))?;
    let gs = gaussian(&wide, 1.0)?;
    let oracle = solve_characteristics(&InitialCondition::Gaussian(gs), &wide, &mathieu(), 0.0, 10.0).map_err(err("oracle"))?;
    let mut errs = [0.0; 2];
    for (e, dt) in errs.iter_mut().zip([0.02, 0.01]) {
        let out = propagate(gs.sample(&wide), &mathieu(), 10.0, dt, 1000, |_| Ok(())).map_err(err("convergence"))?;
        *e = out.field.linf_distance(&oracle).map_err(err("convergence"))?;
    }
    let ratio = errs[0] / errs[1];
    let passed = norm_drift <= 1e-10 && ret <= 1e-3 && (3.5..=4.5).contains(&ratio);
    Ok(Verdict::new(
        passed,
        format!(
            "norm drift {norm_drift:.1e} (<= 1e-10), return L-inf {ret:.1e} (<= 1e-3), \
             L-inf {:.2e} -> {:.2e} on halving dt, ratio {ratio:.2} (in [3.5, 4.5])",
            errs[0], errs[1]
        ),
    ))
}

/// 256² Mathieu run from `(1, 0)` on the wide box, `t ∈ [0, 10]`, `dt = 10⁻³`.
pub fn mathieu_reference(rho_source: RhoSource) -> KvnConfig {
    KvnConfig {
        grid: GridBlock { nx: 256, np: 256, lx: 20.0, lp: 20.0 },
        initial: InitialBlock { x0: 1.0, p0: 0.0, sx: 1.0, sp: 1.0 },
        rho0: 1.0,
        rhodot0: 0.0,
        rho_source,
        t1: 10.0,
        dt: 1e-3,
        observe_stride: 100,
        max_drift_i: 1e-4,
        max_drift_var: 1e-3,
        max_norm_drift: 1e-9,
        max_boundary_mass: 1e-8,
    }
}

fn criterion_7() -> Result<Verdict, CliError> {
    let unit = StudyConfig {
        grid: PhaseSpaceGrid::new(256, 256, 8.0, 8.0).map_err(err("grid"))?,
        center: ClassicalState::new(0.0, 0.0),
        widths: (1.0, 1.0),
        profile: StiffnessProfile::constant(1.0),
        rho0: 1.0,
        rhodot0: 0.0,
        t1: 20.0,
        dt: 1e-3,
        stride: 1000,
        rho_source: RhoSource::Ermakov,
    };
    let r = run_invariant_study(&unit).map_err(err("unit oscillator"))?;
    let i0 = r.expect_i[0];
    let unit_ok = (i0 - 1.0).abs() <= 1e-6 && r.max_rel_drift_i <= 1e-4;

    let cfg = mathieu_reference(RhoSource::Ermakov);
    let m = run_invariant_study(&study_config(&mathieu(), &cfg)?).map_err(err("mathieu"))?;
    let mathieu_ok = m.max_rel_drift_i <= 1e-4 && m.max_rel_drift_var <= 1e-3 && m.truncated_at.is_none();
    Ok(Verdict::new(
        unit_ok && mathieu_ok,
        format!(
            "unit: <I>(0) = {i0:.9} (1 +- 1e-6), drift {:.1e} (<= 1e-4); \
             mathieu: <I> drift {:.1e} (<= 1e-4), Var drift {:.1e} (<= 1e-3, {})",
            r.max_rel_drift_i,
            m.max_rel_drift_i,
            m.max_rel_drift_var,
            if m.var_drift_relative { "relative" } else { "absolute" }
        ),
    ))
}

fn criterion_8() -> Result<Verdict, CliError> {
    let cfg = mathieu_reference(RhoSource::Linear);
    let r = run_invariant_study(&study_config(&mathieu(), &cfg)?).map_err(err("negative control"))?;
    let rejected = kvn_assertions(&r, &cfg).iter().any(|a| !a.passed);
    let mut detail = format!("<I> drift {:.2e} (>= 1e-2)", r.max_rel_drift_i);
    if let Some(t) = r.truncated_at {
        let _ = write!(detail, ", rho reached zero at t = {t}");
    }
    let _ = write!(detail, ", kvn assertions {}", if rejected { "fail as required" } else { "passed" });
    Ok(Verdict::new(r.max_rel_drift_i >= 1e-2 && rejected, detail))
}

fn criterion_fn(id: u8) -> Criterion {
    match id {
        1 => criterion_1,
        2 => criterion_2,
        3 => criterion_3,
        4 => criterion_4,
        5 => criterion_5,
        6 => criterion_6,
        7 => criterion_7,
        _ => criterion_8,
    }
}

/// Runs one criterion; errors count as failures.
pub fn run_criterion(id: u8) -> CriterionResult {
    let (id, title) = CRITERIA[usize::from(id.clamp(1, 8)) - 1];
    let started = Instant::now();
    let (passed, detail) = match criterion_fn(id)() {
        Ok(v) => (v.passed, v.detail),
        Err(e) => (false, format!("error: {e}")),
    };
    CriterionResult { id, title, passed, detail, seconds: started.elapsed().as_secs_f64() }
}

/// Runs all eight criteria in order, calling `report` after each.
pub fn run_suite(mut report: impl FnMut(&CriterionResult)) -> Vec<CriterionResult> {
    CRITERIA
        .iter()
        .map(|(id, _)| {
            let r = run_criterion(*id);
            report(&r);
            r
        })
        .collect()
}

#[derive(Debug, Serialize)]
struct SuiteSummary<'a> {
    command: &'static str,
    passed: bool,
    criteria: &'a [CriterionResult],
    identities: [&'static str; 7],
    wall_clock_s: f64,
    artifacts: Vec<String>,
}

/// `kvn-lab all`: runs the suite and writes `acceptance.csv`, `summary.json`
/// and, on any failure, `FAILED`.
pub fn run_all(out: &Path, report: impl FnMut(&CriterionResult)) -> Result<Vec<CriterionResult>, CliError> {
    let started = Instant::now();
    std::fs::create_dir_all(out).map_err(|source| CliError::Io { path: out.into(), source })?;
    let marker = out.join(crate::FAILED_FILE);
    if marker.exists() {
        std::fs::remove_file(&marker).map_err(|source| CliError::Io { path: marker.clone(), source })?;
    }
    let results = run_suite(report);
    let mut csv = String::from("criterion,title,passed\n");
    for r in &results {
        let _ = writeln!(csv, "{},{},{}", r.id, r.title, r.passed);
    }
    let artifacts = vec![write_artifact(out, "acceptance.csv", &csv)?, crate::SUMMARY_FILE.to_string()];
    let summary = SuiteSummary {
        command: "all",
        passed: results.iter().all(|r| r.passed),
        criteria: &results,
        identities: IDENTITIES,
        wall_clock_s: started.elapsed().as_secs_f64(),
        artifacts,
    };
    finish(out, &summary)?;
    Ok(results)
}
