//! Run configurations.
//!
//! A configuration is one flat JSON object. Every key is optional; missing
//! keys take the documented defaults and unknown keys are rejected. All
//! problems found in one document are reported together, each with the JSON
//! path it refers to.

use std::fmt;
use std::io::Read as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use kvn_ermakov::dynamics::{StiffnessProfile, Tolerances, DEFAULT_RHO_MIN};
use kvn_ermakov::invariant::RhoSource;
use kvn_ermakov::propagator::{step_count, PhaseSpaceGrid};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Ermakov,
    Classical,
    Kvn,
    Symcheck,
}

impl Command {
    pub const ALL: [Command; 4] = [Command::Ermakov, Command::Classical, Command::Kvn, Command::Symcheck];

    pub fn name(self) -> &'static str {
        match self {
            Command::Ermakov => "ermakov",
            Command::Classical => "classical",
            Command::Kvn => "kvn",
            Command::Symcheck => "symcheck",
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Command {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Command::ALL.into_iter().find(|c| c.name() == s).ok_or_else(|| format!("unknown command {s:?}"))
    }
}

/// One schema violation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigIssue {
    pub path: String,
    pub message: String,
}

impl fmt::Display for ConfigIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid configuration:\n{}", .0.iter().map(|i| format!("  {i}")).collect::<Vec<_>>().join("\n"))]
    Schema(Vec<ConfigIssue>),
}

impl ConfigError {
    pub fn issues(&self) -> &[ConfigIssue] {
        match self {
            ConfigError::Schema(v) => v,
            _ => &[],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridBlock {
    pub nx: usize,
    pub np: usize,
    pub lx: f64,
    pub lp: f64,
}

impl Default for GridBlock {
    fn default() -> Self {
        GridBlock { nx: 256, np: 256, lx: 20.0, lp: 20.0 }
    }
}

/// Center and widths of the initial Gaussian.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InitialBlock {
    pub x0: f64,
    pub p0: f64,
    pub sx: f64,
    pub sp: f64,
}

impl Default for InitialBlock {
    fn default() -> Self {
        InitialBlock { x0: 1.0, p0: 0.0, sx: 1.0, sp: 1.0 }
    }
}

/// Sampling rectangle for classical initial states.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SampleBox {
    pub q: (f64, f64),
    pub p: (f64, f64),
}

impl Default for SampleBox {
    fn default() -> Self {
        SampleBox { q: (-2.0, 2.0), p: (-2.0, 2.0) }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErmakovConfig {
    pub rho0: f64,
    pub rhodot0: f64,
    pub t0: f64,
    pub t1: f64,
    pub dt: f64,
    pub tol: Tolerances,
    pub rho_min: f64,
    pub max_pinney_gap: f64,
    pub max_residual: f64,
    /// The residual check covers `[t0, residual_until]`; the three-point
    /// stencil loses accuracy wherever `ρ` becomes small.
    pub residual_until: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassicalConfig {
    pub seed: u64,
    pub count: usize,
    pub sample_box: SampleBox,
    pub rho0: f64,
    pub rhodot0: f64,
    pub t1: f64,
    pub dt: f64,
    pub max_drift: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KvnConfig {
    pub grid: GridBlock,
    pub initial: InitialBlock,
    pub rho0: f64,
    pub rhodot0: f64,
    pub rho_source: RhoSource,
    pub t1: f64,
    pub dt: f64,
    pub observe_stride: usize,
    pub max_drift_i: f64,
    pub max_drift_var: f64,
    pub max_norm_drift: f64,
    pub max_boundary_mass: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SymcheckConfig {
    /// A built-in identity name, `all`, or `custom`.
    pub identity: String,
    pub invariant: Option<String>,
    pub hamiltonian: Option<String>,
    pub sign: i8,
}

pub const IDENTITIES: [&str; 7] = [
    "invariance-total",
    "invariance-i1",
    "invariance-i2",
    "hamiltonian-split",
    "canonical-rotation",
    "canonical-relabel",
    "form-equality",
];

#[derive(Debug, Clone, PartialEq)]
pub enum Study {
    Ermakov(ErmakovConfig),
    Classical(ClassicalConfig),
    Kvn(KvnConfig),
    Symcheck(SymcheckConfig),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub profile: StiffnessProfile,
    pub out: Option<PathBuf>,
    pub study: Study,
}

/// Command-line values that replace configuration keys.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub dt: Option<f64>,
    pub seed: Option<u64>,
    /// `(name, value)` pairs written into the profile object.
    pub profile: Vec<(String, f64)>,
}

impl Overrides {
    fn apply(&self, doc: &mut Map<String, Value>) {
        if let Some(dt) = self.dt {
            doc.insert("dt".into(), json!(dt));
        }
        if let Some(seed) = self.seed {
            doc.insert("seed".into(), json!(seed));
        }
        if !self.profile.is_empty() {
            let entry = doc.entry("profile").or_insert_with(default_profile_json);
            if let Value::Object(p) = entry {
                for (k, v) in &self.profile {
                    p.insert(k.clone(), json!(v));
                }
            }
        }
    }
}

fn default_profile() -> StiffnessProfile {
    StiffnessProfile::mathieu(1.0, 0.5, 2.0)
}

fn default_profile_json() -> Value {
    serde_json::to_value(default_profile()).expect("profile serializes")
}

/// Reads keys from one object, recording problems instead of stopping.
struct Fields<'a> {
    obj: &'a Map<String, Value>,
    issues: &'a mut Vec<ConfigIssue>,
}

impl Fields<'_> {
    fn path(key: &str) -> String {
        format!("$.{key}")
    }

    fn issue(&mut self, key: &str, message: impl Into<String>) {
        self.issues.push(ConfigIssue { path: Self::path(key), message: message.into() });
    }

    fn get<T: DeserializeOwned>(&mut self, key: &str, default: T) -> T {
        match self.obj.get(key) {
            None => default,
            Some(v) => T::deserialize(v).unwrap_or_else(|e| {
                self.issue(key, e.to_string());
                default
            }),
        }
    }

    fn positive(&mut self, key: &str, default: f64) -> f64 {
        let v: f64 = self.get(key, default);
        if !(v > 0.0 && v.is_finite()) {
            self.issue(key, format!("must be positive and finite, got {v}"));
        }
        v
    }

    fn finite(&mut self, key: &str, default: f64) -> f64 {
        let v: f64 = self.get(key, default);
        if !v.is_finite() {
            self.issue(key, "must be finite");
        }
        v
    }

    fn reject_unknown(&mut self, allowed: &[&str]) {
        let mut unknown: Vec<&String> = self.obj.keys().filter(|k| !allowed.contains(&k.as_str())).collect();
        unknown.sort();
        for k in unknown {
            self.issues.push(ConfigIssue { path: Self::path(k), message: "unknown key".into() });
        }
    }
}

const COMMON_KEYS: [&str; 3] = ["command", "profile", "out"];

fn check_divides(f: &mut Fields<'_>, t0: f64, t1: f64, dt: f64) {
    if t1 > t0 && dt > 0.0 && step_count(t1 - t0, dt).is_none() {
        f.issue("dt", format!("{dt} does not divide the span {}", t1 - t0));
    }
}

fn read_ermakov(f: &mut Fields<'_>) -> ErmakovConfig {
    f.reject_unknown(
        &[
            &COMMON_KEYS[..],
            &["rho0", "rhodot0", "t0", "t1", "dt", "rtol", "atol", "rho_min", "max_pinney_gap", "max_residual", "residual_until"],
        ]
        .concat(),
    );
    let tol = Tolerances::default();
    let c = ErmakovConfig {
        rho0: f.positive("rho0", 1.0),
        rhodot0: f.finite("rhodot0", 0.0),
        t0: f.finite("t0", 0.0),
        t1: f.finite("t1", 20.0),
        dt: f.positive("dt", 1e-3),
        tol: Tolerances { rtol: f.positive("rtol", tol.rtol), atol: f.positive("atol", tol.atol) },
        rho_min: f.positive("rho_min", DEFAULT_RHO_MIN),
        max_pinney_gap: f.positive("max_pinney_gap", 1e-8),
        max_residual: f.positive("max_residual", 1e-5),
        residual_until: f.finite("residual_until", 5.0),
    };
    if c.t1 <= c.t0 {
        f.issue("t1", format!("must exceed t0 = {}", c.t0));
    }
    check_divides(f, c.t0, c.t1, c.dt);
    // The residual stencil needs five samples.
    if c.residual_until < c.t0 + 4.0 * c.dt {
        f.issue("residual_until", "window holds fewer than five samples");
    }
    c
}

fn read_classical(f: &mut Fields<'_>) -> ClassicalConfig {
    f.reject_unknown(&[&COMMON_KEYS[..], &["seed", "count", "box", "rho0", "rhodot0", "t1", "dt", "max_drift"]].concat());
    let c = ClassicalConfig {
        seed: f.get("seed", 42),
        count: f.get("count", 100),
        sample_box: f.get("box", SampleBox::default()),
        rho0: f.positive("rho0", 1.0),
        rhodot0: f.finite("rhodot0", 0.0),
        t1: f.positive("t1", 20.0),
        dt: f.positive("dt", 1e-2),
        max_drift: f.positive("max_drift", 1e-7),
    };
    if c.count == 0 {
        f.issue("count", "must be at least 1");
    }
    let b = c.sample_box;
    if !(b.q.0 < b.q.1 && b.p.0 < b.p.1) || ![b.q.0, b.q.1, b.p.0, b.p.1].iter().all(|v| v.is_finite()) {
        f.issue("box", "each range needs finite bounds with lo < hi");
    }
    check_divides(f, 0.0, c.t1, c.dt);
    c
}

fn read_kvn(f: &mut Fields<'_>) -> KvnConfig {
    f.reject_unknown(
        &[
            &COMMON_KEYS[..],
            &[
                "grid",
                "initial",
                "rho0",
                "rhodot0",
                "rho_source",
                "t1",
                "dt",
                "observe_stride",
                "max_drift_i",
                "max_drift_var",
                "max_norm_drift",
                "max_boundary_mass",
            ],
        ]
        .concat(),
    );
    let c = KvnConfig {
        grid: f.get("grid", GridBlock::default()),
        initial: f.get("initial", InitialBlock::default()),
        rho0: f.positive("rho0", 1.0),
        rhodot0: f.finite("rhodot0", 0.0),
        rho_source: f.get("rho_source", RhoSource::Ermakov),
        t1: f.positive("t1", 10.0),
        dt: f.positive("dt", 1e-3),
        observe_stride: f.get("observe_stride", 100),
        max_drift_i: f.positive("max_drift_i", 1e-4),
        max_drift_var: f.positive("max_drift_var", 1e-3),
        max_norm_drift: f.positive("max_norm_drift", 1e-9),
        max_boundary_mass: f.positive("max_boundary_mass", 1e-8),
    };
    if let Err(e) = PhaseSpaceGrid::new(c.grid.nx, c.grid.np, c.grid.lx, c.grid.lp) {
        f.issue("grid", e.to_string());
    }
    let i = c.initial;
    if !(i.sx > 0.0 && i.sp > 0.0) || ![i.x0, i.p0, i.sx, i.sp].iter().all(|v| v.is_finite()) {
        f.issue("initial", "center must be finite and widths positive");
    }
    if c.observe_stride == 0 {
        f.issue("observe_stride", "must be at least 1");
    }
    check_divides(f, 0.0, c.t1, c.dt);
    c
}

fn read_symcheck(f: &mut Fields<'_>) -> SymcheckConfig {
    f.reject_unknown(&[&COMMON_KEYS[..], &["identity", "invariant", "hamiltonian", "sign"]].concat());
    let c = SymcheckConfig {
        identity: f.get("identity", "all".to_string()),
        invariant: f.get("invariant", None),
        hamiltonian: f.get("hamiltonian", None),
        sign: f.get("sign", 1),
    };
    let known = c.identity == "all" || c.identity == "custom" || IDENTITIES.contains(&c.identity.as_str());
    if !known {
        f.issue("identity", format!("unknown identity {:?}; expected all, custom or one of {}", c.identity, IDENTITIES.join(", ")));
    }
    if (c.identity == "custom") != c.invariant.is_some() {
        f.issue("invariant", "an invariant expression is required exactly when identity is \"custom\"");
    }
    if c.hamiltonian.is_some() && c.invariant.is_none() {
        f.issue("hamiltonian", "only used with a custom invariant");
    }
    if c.sign != 1 && c.sign != -1 {
        f.issue("sign", format!("must be 1 or -1, got {}", c.sign));
    }
    c
}

/// Validates a parsed JSON document as a configuration for `command`.
pub fn parse_value(command: Command, mut doc: Value, overrides: &Overrides) -> Result<RunConfig, ConfigError> {
    let Value::Object(obj) = &mut doc else {
        return Err(ConfigError::Schema(vec![ConfigIssue { path: "$".into(), message: "expected a JSON object".into() }]));
    };
    overrides.apply(obj);
    let mut issues = Vec::new();
    let mut f = Fields { obj, issues: &mut issues };
    if let Some(named) = f.get::<Option<Command>>("command", None) {
        if named != command {
            f.issue("command", format!("configuration is for {named}, not {command}"));
        }
    }
    let profile = f.get("profile", default_profile());
    let out: Option<PathBuf> = f.get("out", None);
    let study = match command {
        Command::Ermakov => Study::Ermakov(read_ermakov(&mut f)),
        Command::Classical => Study::Classical(read_classical(&mut f)),
        Command::Kvn => Study::Kvn(read_kvn(&mut f)),
        Command::Symcheck => Study::Symcheck(read_symcheck(&mut f)),
    };
    if issues.is_empty() {
        Ok(RunConfig { profile, out, study })
    } else {
        Err(ConfigError::Schema(issues))
    }
}

pub fn parse_str(command: Command, text: &str, overrides: &Overrides) -> Result<RunConfig, ConfigError> {
    parse_value(command, serde_json::from_str(text)?, overrides)
}

/// Reads a configuration from `path`, from stdin when `path` is `-`, or
/// starts from `{}` when there is no path.
pub fn parse_config(command: Command, path: Option<&Path>, overrides: &Overrides) -> Result<RunConfig, ConfigError> {
    let text = match path {
        None => "{}".to_string(),
        Some(p) if p.as_os_str() == "-" => {
            let mut s = String::new();
            std::io::stdin().read_to_string(&mut s).map_err(|source| ConfigError::Io { path: p.into(), source })?;
            s
        }
        Some(p) => std::fs::read_to_string(p).map_err(|source| ConfigError::Io { path: p.into(), source })?,
    };
    parse_str(command, &text, overrides)
}

impl RunConfig {
    pub fn command(&self) -> Command {
        match self.study {
            Study::Ermakov(_) => Command::Ermakov,
            Study::Classical(_) => Command::Classical,
            Study::Kvn(_) => Command::Kvn,
            Study::Symcheck(_) => Command::Symcheck,
        }
    }

    /// The configuration with every default spelled out. Parsing the result
    /// gives back `self`.
    pub fn to_json(&self) -> Value {
        let mut v = match &self.study {
            Study::Ermakov(c) => json!({
                "rho0": c.rho0, "rhodot0": c.rhodot0, "t0": c.t0, "t1": c.t1, "dt": c.dt,
                "rtol": c.tol.rtol, "atol": c.tol.atol, "rho_min": c.rho_min,
                "max_pinney_gap": c.max_pinney_gap, "max_residual": c.max_residual,
                "residual_until": c.residual_until,
            }),
            Study::Classical(c) => json!({
                "seed": c.seed, "count": c.count, "box": c.sample_box, "rho0": c.rho0,
                "rhodot0": c.rhodot0, "t1": c.t1, "dt": c.dt, "max_drift": c.max_drift,
            }),
            Study::Kvn(c) => json!({
                "grid": c.grid, "initial": c.initial, "rho0": c.rho0, "rhodot0": c.rhodot0,
                "rho_source": c.rho_source, "t1": c.t1, "dt": c.dt, "observe_stride": c.observe_stride,
                "max_drift_i": c.max_drift_i, "max_drift_var": c.max_drift_var,
                "max_norm_drift": c.max_norm_drift, "max_boundary_mass": c.max_boundary_mass,
            }),
            Study::Symcheck(c) => {
                let mut m = json!({ "identity": c.identity, "sign": c.sign });
                if let Some(s) = &c.invariant {
                    m["invariant"] = json!(s);
                }
                if let Some(s) = &c.hamiltonian {
                    m["hamiltonian"] = json!(s);
                }
                m
            }
        };
        v["command"] = json!(self.command());
        v["profile"] = serde_json::to_value(&self.profile).expect("profile serializes");
        if let Some(out) = &self.out {
            v["out"] = json!(out);
        }
        v
    }
}

impl fmt::Display for RunConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&serde_json::to_string_pretty(&self.to_json()).map_err(|_| fmt::Error)?)
    }
}
