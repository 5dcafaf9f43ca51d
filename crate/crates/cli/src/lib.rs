//! Experiment front end: configuration parsing, study dispatch, artifacts and
//! the bundled acceptance suite.

pub mod config;
pub mod emit;
pub mod rng;
pub mod run;
pub mod suite;

use std::path::PathBuf;

pub use config::{parse_config, parse_str, Command, ConfigError, ConfigIssue, Overrides, RunConfig, Study};
pub use emit::{emit_plotdata, Report};
pub use run::{run, Assertion, RunSummary, FAILED_FILE, SUMMARY_FILE};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("cannot write {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("no series")]
    NoSeries,
    #[error("{stage}: {message}")]
    Study { stage: &'static str, message: String },
}

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/cli.md")]
mod book_cli {}
