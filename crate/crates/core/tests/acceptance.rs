//! Acceptance suite at the default configuration: one PASS/FAIL line per
//! criterion, non-zero exit if any fails.

use std::process::ExitCode;

use cavity_thermo::config::RunConfig;
use cavity_thermo::verify::Suite;

fn main() -> ExitCode {
    let quick = std::env::args().any(|a| a == "--quick");
    let cfg = RunConfig {
        quick,
        ensemble: cavity_thermo::ensemble::EnsembleConfig {
            n_traj: if quick {
                cavity_thermo::config::QUICK_N_TRAJ
            } else {
                RunConfig::default().ensemble.n_traj
            },
            ..Default::default()
        },
        ..RunConfig::default()
    };
    let suite = Suite::new(cfg);
    let results = suite
        .run_all(&mut std::io::stdout().lock())
        .expect("writing results");
    if results.iter().all(|r| r.passed) {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
