//! Single-source flooding against its certified round budget.
//!
//! A random T-connected schedule is analyzed first: the minimum isoperimetric
//! number over all T-round windows yields a round budget sufficient for any
//! flood to cover the network. The flood is then simulated from node 0 and the
//! budget is compared with the exact cover time reported by the oracle.
//!
//! Run with: cargo run --example broadcast

use anonnet::oracle::temporal_broadcast_time;
use anonnet::params::flood_round_bound;
use anonnet::protocol::a2a::or_flood;
use anonnet::schedule::{Schedule, WindowOracle};
use anonnet::sim::RunCtx;

pub fn run_example() -> anyhow::Result<()> {
    let schedule = Schedule::random_connected(6, 1, 2, 9)?;
    println!("schedule: {} (period {} rounds)", schedule.label(), schedule.period_len());

    let oracle = WindowOracle::new(&schedule, schedule.t());
    let i_min = oracle.i_min()?;
    let budget = flood_round_bound(schedule.n() as u64, &i_min, schedule.t())?;
    println!("window expansion i_min = {i_min}");
    println!("certified round budget = {budget}");

    let mut init = vec![false; schedule.n()];
    init[0] = true;
    let mut ctx = RunCtx::new(1_000_000_000_000);
    let covered = or_flood(&schedule, &init, budget, &mut ctx)?;
    println!("flags after {budget} rounds: {covered:?}");

    let exact = temporal_broadcast_time(&schedule, 1, budget);
    match exact {
        Some(r) => println!("exact cover time from node 0: {r} rounds"),
        None => println!("exact cover time from node 0: above the budget"),
    }

    anyhow::ensure!(covered.iter().all(|&f| f), "the budget must suffice to cover all nodes");
    anyhow::ensure!(exact.is_some_and(|r| r <= budget), "oracle must agree with the budget");
    Ok(())
}

fn main() -> anyhow::Result<()> {
    run_example()
}
