//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on failure.
//!
//! `NSBANDIT_ACCEPTANCE_ONLY=2,5` restricts the run to some criteria and
//! `NSBANDIT_ACCEPTANCE_SEED` overrides the master seed.

use std::process::ExitCode;
use std::time::Instant;

use nsbandit::acceptance::{run_acceptance, AcceptanceConfig};

fn main() -> ExitCode {
    let mut config = AcceptanceConfig::default();
    if let Ok(seed) = std::env::var("NSBANDIT_ACCEPTANCE_SEED") {
        config.seed = seed
            .parse()
            .expect("NSBANDIT_ACCEPTANCE_SEED must be an integer");
    }
    let only: Vec<u8> = std::env::var("NSBANDIT_ACCEPTANCE_ONLY")
        .map(|s| {
            s.split(',')
                .filter(|t| !t.trim().is_empty())
                .map(|t| t.trim().parse().expect("criterion ids must be integers"))
                .collect()
        })
        .unwrap_or_default();
    println!("acceptance suite, seed {}", config.seed);
    let start = Instant::now();
    let report = run_acceptance(&config, &only, |c| {
        println!("{}  ({:.1}s)", c.line(), c.seconds);
    });
    let failed = report.criteria.iter().filter(|c| !c.passed).count();
    println!(
        "{} of {} criteria passed in {:.1}s",
        report.criteria.len() - failed,
        report.criteria.len(),
        start.elapsed().as_secs_f64()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
