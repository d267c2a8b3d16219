//! Counting how many nodes hold a token, without identifiers.
//!
//! Two of five nodes on a static path start with a token. Holders inject one
//! unit of potential each; everyone then runs truncated fixed-point averaging
//! long enough that every node's local value rounds to the exact count.
//!
//! Run with: cargo run --example multiplicity_counting

use anonnet::graph::ConstituentGraph;
use anonnet::protocol::multiplicity::run_multiplicity;
use anonnet::protocol::{ExpansionMode, Reduction};
use anonnet::schedule::Schedule;
use anonnet::sim::RunCtx;

pub fn run_example() -> anyhow::Result<()> {
    let schedule = Schedule::static_graph(ConstituentGraph::path(5), 1, "static-path")?;
    let holders = [true, false, true, false, false];
    println!("schedule: {} (n = {})", schedule.label(), schedule.n());
    println!("holders:  {:?}", holders);

    let mut ctx = RunCtx::new(1_000_000_000_000);
    let out = run_multiplicity(
        &schedule,
        &holders,
        1,
        &ExpansionMode::Exact,
        Reduction::NONE,
        1,
        &mut ctx,
    )?;

    let p = &out.params;
    println!("\nderived parameters:");
    println!("  share denominator d = {}", p.d);
    println!("  fixed-point depth c = {}", p.c);
    println!("  averaging rounds    = {} (T * b = {} * {})", p.rounds, p.t, p.b);

    println!("\nper-node count: {:?}", out.per_node);
    println!("rounds used:    {}", out.rounds);

    anyhow::ensure!(out.per_node.iter().all(|&v| v == 2), "every node must report 2 holders");
    Ok(())
}

fn main() -> anyhow::Result<()> {
    run_example()
}
