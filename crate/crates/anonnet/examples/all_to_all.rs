//! All-to-all input exchange over congested links.
//!
//! Every node starts with a small integer input. Nodes cannot attach
//! identifiers, so the protocol first discovers n, then walks the input space
//! bit by bit: each candidate bitstring is probed by flooding, and once a full
//! value is pinned down its multiplicity is counted. Every node ends with the
//! same histogram of all inputs, including duplicates it cannot tell apart.
//!
//! Run with: cargo run --example all_to_all

use anonnet::graph::ConstituentGraph;
use anonnet::params::Epsilon;
use anonnet::protocol::a2a::run_a2a;
use anonnet::protocol::{ExpansionMode, Reduction};
use anonnet::schedule::Schedule;
use anonnet::sim::RunCtx;

pub fn run_example() -> anyhow::Result<()> {
    let schedule = Schedule::static_graph(ConstituentGraph::clique(4), 1, "static-clique")?;
    let supervisors = [true, false, false, false];
    // A duplicated value: nodes 1 and 2 are indistinguishable throughout.
    let inputs = [3u64, 1, 1, 0];
    println!("schedule: {}", schedule.label());
    println!("inputs:   {:?}", inputs);

    let mut ctx = RunCtx::new(1_000_000_000_000);
    let out = run_a2a(
        &schedule,
        &supervisors,
        &inputs,
        Epsilon::integer(1),
        &ExpansionMode::Exact,
        Reduction::NONE,
        &mut ctx,
    )?;

    println!("\nagreed size:     {}", out.n);
    println!("key width:       {} bits", out.width);
    println!("discovery order: {:?}", out.discovery_order);
    for (u, hist) in out.per_node.iter().enumerate() {
        println!("node {u} histogram: {hist:?}");
    }
    println!("total rounds:    {}", out.rounds);

    let first = &out.per_node[0];
    anyhow::ensure!(out.per_node.iter().all(|h| h == first), "all nodes must agree");
    anyhow::ensure!(first.values().sum::<u64>() == 4, "multiplicities must sum to n");
    anyhow::ensure!(first["01"] == 2, "the duplicated input must count twice");
    Ok(())
}

fn main() -> anyhow::Result<()> {
    run_example()
}
