//! Plot-ready CSV series. Data only; nothing is rendered.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use kvn_ermakov::dynamics::ErmakovSolution;
use kvn_ermakov::invariant::InvariantReport;

use crate::CliError;

/// A completed run whose time series can be plotted.
#[derive(Debug, Clone, Copy)]
pub enum Report<'a> {
    Invariant(&'a InvariantReport),
    Ermakov(&'a ErmakovSolution),
}

/// Writes `contents` to `dir/name` and returns `name`.
pub fn write_artifact(dir: &Path, name: &str, contents: &str) -> Result<String, CliError> {
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|source| CliError::Io { path, source })?;
    Ok(name.to_string())
}

/// One CSV with a header row and equally long columns; extra rows in longer
/// columns are dropped.
pub fn write_columns(dir: &Path, name: &str, header: &[&str], columns: &[&[f64]]) -> Result<String, CliError> {
    let rows = columns.iter().map(|c| c.len()).min().unwrap_or(0);
    let mut csv = header.join(",");
    csv.push('\n');
    for i in 0..rows {
        let row: Vec<String> = columns.iter().map(|c| c[i].to_string()).collect();
        let _ = writeln!(csv, "{}", row.join(","));
    }
    write_artifact(dir, name, &csv)
}

/// Writes `invariant_vs_t.csv`, `rho_vs_t.csv` and `norm_vs_t.csv` for a KvN
/// report, or `rho_vs_t.csv` for an Ermakov solution. Returns the file names.
pub fn emit_plotdata(report: Report<'_>, dir: &Path) -> Result<Vec<String>, CliError> {
    match report {
        Report::Invariant(r) => {
            if r.is_empty() {
                return Err(CliError::NoSeries);
            }
            Ok(vec![
                write_columns(dir, "invariant_vs_t.csv", &["t", "expect_I"], &[&r.times, &r.expect_i])?,
                write_columns(dir, "rho_vs_t.csv", &["t", "rho"], &[&r.times, &r.rho])?,
                write_columns(dir, "norm_vs_t.csv", &["t", "norm"], &[&r.times, &r.norm])?,
            ])
        }
        Report::Ermakov(s) => {
            if s.is_empty() {
                return Err(CliError::NoSeries);
            }
            Ok(vec![write_columns(dir, "rho_vs_t.csv", &["t", "rho"], &[s.times(), s.rho()])?])
        }
    }
}
