//! Driving runs from JSON experiment configs.
//!
//! The same config format the CLI accepts is available as a library type:
//! parse, validate, run, and get a JSON-serializable result back. A sweep
//! config takes axis lists and runs the cross product, skipping infeasible
//! cells (supervisor counts at or above n) and collecting pass/fail per cell.
//!
//! Run with: cargo run --example experiment_config

use anonnet::config::{run_experiment, run_sweep, ExperimentConfig, SweepConfig};

pub fn run_example() -> anyhow::Result<()> {
    let cfg = ExperimentConfig::from_json_str(
        r#"{
            "protocol": "rmc",
            "n": 3,
            "ell": 1,
            "schedule": { "family": "static-clique" },
            "epsilon": "1"
        }"#,
    )?;
    let result = run_experiment(&cfg)?;
    println!("single run: protocol = {}, schedule = {}", result.protocol, result.schedule);
    println!("  estimate path    = {:?}", result.estimate_path);
    println!("  rounds           = {}", result.rounds);
    println!("  max message bits = {}", result.max_message_bits);
    println!("  outputs          = {}", serde_json::to_string_pretty(&result.outputs)?);

    let sweep = SweepConfig::from_json_str(
        r#"{
            "base": { "protocol": "rmc", "n": 2, "schedule": { "family": "static-path" } },
            "n": [2, 3, 4],
            "ell": [1, 2, 3]
        }"#,
    )?;
    let report = run_sweep(&sweep, 2);
    println!("\nsweep: {} passed, {} failed", report.passed, report.failed);
    for cell in &report.cells {
        println!(
            "  n={} ell={} {}: pass={} rounds={:?}",
            cell.n, cell.ell, cell.schedule, cell.pass, cell.rounds
        );
    }

    anyhow::ensure!(report.all_passed(), "every feasible sweep cell must pass");
    anyhow::ensure!(report.cells.len() == 6, "infeasible ell >= n cells are skipped");
    Ok(())
}

fn main() -> anyhow::Result<()> {
    run_example()
}
