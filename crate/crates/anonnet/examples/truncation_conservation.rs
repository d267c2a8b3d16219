//! Fixed-point potentials: shares truncate, mass never leaks.
//!
//! Potentials are integers over the fixed denominator d^c. Each averaging
//! round a node sends floor(num/d) to every neighbor and keeps the rest, so
//! values stay nonnegative and the global sum is conserved to the last bit.
//! The example runs the truncated dynamics next to the exact (rational)
//! dynamics and prints how far truncation lags behind in one round.
//!
//! Run with: cargo run --example truncation_conservation

use anonnet::graph::ConstituentGraph;
use anonnet::numerics::{mass_conserved, total_numerator, FixedPointParams, Potential};
use anonnet::oracle::{one_round_truncation_gap, truncated_evolution};
use anonnet::schedule::Schedule;
use num::Signed;

pub fn run_example() -> anyhow::Result<()> {
    let g = ConstituentGraph::path(4);
    let schedule = Schedule::static_graph(g.clone(), 1, "static-path")?;
    let params = FixedPointParams::new(8, 3);
    println!("fixed point: denominator {}^{} = {}", params.d, params.c, params.scale());

    // Nodes 0 and 3 start with one unit each; the middle starts empty.
    let initial: Vec<Potential> = [1u64, 0, 0, 1]
        .iter()
        .map(|&v| Potential::from_integer(v, params))
        .collect();
    let before = total_numerator(&initial);

    let states = truncated_evolution(&initial, &schedule, params, 6)?;
    println!("\n{:>6} {}", "round", "potentials (exact)");
    for (r, state) in states.iter().enumerate() {
        let rendered: Vec<String> = state.iter().map(|p| p.exact_string(params)).collect();
        println!("{:>6} [{}]", r, rendered.join(", "));
    }

    let last = states.last().unwrap();
    let after = total_numerator(last);
    println!("\ntotal mass: {before} -> {after}");
    anyhow::ensure!(mass_conserved(&initial, last), "averaging must conserve the sum exactly");

    // Round 4 holds numerators the denominator no longer divides, so the
    // floor visibly bites there.
    let gap = one_round_truncation_gap(&g, &states[4], params)?;
    println!("\nfrom round 4, truncation losses per outgoing share: {:?}",
        gap.share_gaps.iter().map(|g| g.to_string()).collect::<Vec<_>>());
    println!("from round 4, node gaps vs exact averaging: {:?}",
        gap.node_gaps.iter().map(|g| g.to_string()).collect::<Vec<_>>());

    anyhow::ensure!(
        gap.share_gaps.iter().all(|g| !g.is_negative()),
        "floored shares never exceed the exact share"
    );
    Ok(())
}

fn main() -> anyhow::Result<()> {
    run_example()
}
