use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context as _;
use clap::{Args, Parser, Subcommand};
use kvn_lab::{parse_config, run, suite, Command, Overrides};

/// Ermakov-Lewis invariant experiments for the KvN oscillator.
#[derive(Debug, Parser)]
#[command(name = "kvn-lab", version)]
struct Cli {
    #[command(subcommand)]
    command: Sub,
    #[command(flatten)]
    flags: Flags,
}

#[derive(Debug, Subcommand)]
enum Sub {
    /// Solve the Ermakov equation directly and by the Pinney construction.
    Ermakov,
    /// Classical invariant drift over seeded random trajectories.
    Classical,
    /// KvN wavefunction run with invariant expectation and variance.
    Kvn,
    /// Exact operator identities.
    Symcheck,
    /// The bundled acceptance suite.
    All,
}

#[derive(Debug, Args)]
struct Flags {
    /// JSON configuration file, or `-` for stdin.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory [default: the config's "out", else out/<command>].
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    dt: Option<f64>,
    /// Only report failures.
    #[arg(long, global = true)]
    quiet: bool,
    /// Profile parameter overrides.
    #[arg(long, global = true, allow_hyphen_values = true)]
    k0: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    a: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    q: Option<f64>,
    #[arg(long, global = true)]
    omega: Option<f64>,
}

impl Flags {
    fn overrides(&self) -> Overrides {
        let profile = [("k0", self.k0), ("a", self.a), ("q", self.q), ("omega", self.omega)]
            .into_iter()
            .filter_map(|(k, v)| v.map(|v| (k.to_string(), v)))
            .collect();
        Overrides { dt: self.dt, seed: self.seed, profile }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.flags.quiet { "error" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match dispatch(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(cli: &Cli) -> anyhow::Result<bool> {
    let quiet = cli.flags.quiet;
    let command = match cli.command {
        Sub::Ermakov => Command::Ermakov,
        Sub::Classical => Command::Classical,
        Sub::Kvn => Command::Kvn,
        Sub::Symcheck => Command::Symcheck,
        Sub::All => {
            let out = cli.flags.out.clone().unwrap_or_else(|| PathBuf::from("out/all"));
            let results = suite::run_all(&out, |r| {
                if !quiet || !r.passed {
                    println!("{}", r.line());
                }
            })?;
            return Ok(results.iter().all(|r| r.passed));
        }
    };
    let config = parse_config(command, cli.flags.config.as_deref(), &cli.flags.overrides())?;
    let out = cli
        .flags
        .out
        .clone()
        .or_else(|| config.out.clone())
        .unwrap_or_else(|| PathBuf::from("out").join(command.name()));
    let summary = run(&config, &out).with_context(|| format!("{command} run"))?;
    for a in &summary.assertions {
        if !quiet || !a.passed {
            let verdict = if a.passed { "PASS" } else { "FAIL" };
            println!("{verdict} {}: {:e} (threshold {:e})", a.name, a.value, a.threshold);
        }
    }
    if let Some(e) = &summary.error {
        println!("FAIL {command}: {e}");
    }
    if !quiet {
        println!("artifacts in {}", out.display());
    }
    Ok(summary.passed)
}
