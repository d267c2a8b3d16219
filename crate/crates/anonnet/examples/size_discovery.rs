//! Network-size discovery on a dynamic schedule.
//!
//! Four anonymous nodes alternate between two perfect matchings, so no single
//! round is connected and the run must work across 2-round windows. One node
//! acts as supervisor. The protocol searches over size estimates k, probing
//! each with a mass-conservation test, until every node learns n exactly.
//!
//! Run with: cargo run --example size_discovery

use anonnet::params::Epsilon;
use anonnet::protocol::rmc::run_rmc;
use anonnet::protocol::{ExpansionMode, Reduction};
use anonnet::schedule::Schedule;
use anonnet::sim::RunCtx;

pub fn run_example() -> anyhow::Result<()> {
    let schedule = Schedule::matching_alternation(4)?;
    println!("schedule: {} (n = {}, T = {})", schedule.label(), schedule.n(), schedule.t());
    for (r, g) in schedule.period().iter().enumerate() {
        println!("  round {r}: {:?}", g.edges());
    }

    // Node 0 supervises; the others only relay and adopt verdicts.
    let supervisors = [true, false, false, false];
    let mut ctx = RunCtx::new(1_000_000_000_000);
    let out = run_rmc(
        &schedule,
        &supervisors,
        Epsilon::integer(1),
        &ExpansionMode::Exact,
        Reduction::NONE,
        &mut ctx,
    )?;

    println!("\nestimate path: {:?}", out.estimate_path);
    println!("{:>6} {:>10} {:>14}", "k", "verdict", "epoch rounds");
    for epoch in &out.epochs {
        println!("{:>6} {:>10} {:>14}", epoch.k, epoch.outcome.name(), epoch.rounds);
    }
    println!("\nper-node size: {:?}", out.per_node);
    println!("total rounds:  {}", out.rounds);

    anyhow::ensure!(out.per_node.iter().all(|&v| v == 4), "every node must learn n = 4");
    Ok(())
}

fn main() -> anyhow::Result<()> {
    run_example()
}
