//! Acceptance criteria 1-8 at their stated tolerances, one line each.
//!
//! `cargo test --test acceptance -- 4 7` runs only the listed criteria.

use std::process::ExitCode;

use kvn_lab::suite::{run_criterion, CRITERIA};

fn main() -> ExitCode {
    let picked: Vec<u8> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).filter(|id| (1..=8).contains(id)).collect();
    let mut failed = 0;
    for (id, _) in CRITERIA {
        if !picked.is_empty() && !picked.contains(&id) {
            continue;
        }
        let r = run_criterion(id);
        println!("{}", r.line());
        failed += usize::from(!r.passed);
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
