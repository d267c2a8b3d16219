//! All-to-all communication emulation: after establishing the system size,
//! nodes discover every distinct input value by binary descent. Each
//! discovery epoch probes input bits from the most significant down; a
//! flood of one-bit flags answers whether any undelivered input carries a 1
//! (preferred) or a 0 at the probed position. Once a value is pinned down,
//! a multiplicity count attaches its frequency. Discovery therefore runs in
//! decreasing numeric order, and the protocol stops at the first epoch
//! whose opening probes both come back empty.

use std::collections::BTreeMap;

use crate::params::{flood_round_bound, Epsilon};
use crate::protocol::multiplicity::run_multiplicity;
use crate::protocol::rmc::{run_rmc, RmcOutcome};
use crate::protocol::{ceil_log2, ExpansionMode, Message, Reduction};
use crate::schedule::Schedule;
use crate::sim::{deliver, RunCtx, SimError, TraceRecord};

#[derive(Debug, Clone)]
pub struct A2aOutcome {
    /// Per node: discovered value (as a fixed-width bit string) to count.
    pub per_node: Vec<BTreeMap<String, u64>>,
    /// The size every node agreed on.
    pub n: u64,
    /// Identifier width `ceil(log2 n)`.
    pub width: u32,
    pub rounds: u64,
    /// Discovery epochs, including the terminating empty probe.
    pub epochs: u64,
    /// Values in discovery order, decreasing.
    pub discovery_order: Vec<String>,
    pub rmc: RmcOutcome,
}

/// Floods one-bit flags for `rounds` rounds; every node forwards the OR of
/// what it holds and hears. Returns each node's final flag.
#[allow(clippy::too_many_arguments)]
fn flood(
    schedule: &Schedule,
    init: &[bool],
    rounds: u64,
    epoch: u64,
    phase: u64,
    probe: u64,
    ctx: &mut RunCtx,
) -> Result<Vec<bool>, SimError> {
    let n = schedule.n();
    let mut flags = init.to_vec();
    for fr in 1..=rounds {
        let round_idx = ctx.take_round()?;
        let g = schedule.graph_at(round_idx);
        let msgs: Vec<Message> = flags
            .iter()
            .map(|v| Message::Flag { value: *v })
            .collect();
        for m in &msgs {
            ctx.audit.observe(round_idx, m.bit_width())?;
        }
        let inboxes = deliver(g, &msgs);
        if ctx.tracer.is_some() {
            for u in 0..n {
                let rec = TraceRecord {
                    round: round_idx,
                    node: u as u32,
                    epoch,
                    phase,
                    block: probe,
                    round_in_phase: fr,
                    sent: msgs[u].render(),
                    sent_bits: msgs[u].bit_width(),
                    received_count: inboxes[u].len() as u32,
                    phi: "-".into(),
                    status: "-".into(),
                };
                ctx.trace(&rec)?;
            }
        }
        for u in 0..n {
            flags[u] = flags[u]
                || inboxes[u]
                    .iter()
                    .any(|m| matches!(m, Message::Flag { value: true }));
        }
    }
    Ok(flags)
}

/// Standalone OR-flood from an initial holder set, for broadcast runs.
pub fn or_flood(
    schedule: &Schedule,
    init: &[bool],
    rounds: u64,
    ctx: &mut RunCtx,
) -> Result<Vec<bool>, SimError> {
    flood(schedule, init, rounds, 1, 1, 1, ctx)
}

/// Collapses a flood result to the consensus bit, failing loudly if the
/// flood budget did not reach every node.
fn consensus(flags: &[bool], what: &str) -> Result<bool, SimError> {
    let first = flags[0];
    if flags.iter().any(|f| *f != first) {
        return Err(SimError::Protocol(format!(
            "nodes disagree after flooding {what}"
        )));
    }
    Ok(first)
}

pub fn run_a2a(
    schedule: &Schedule,
    supervisors: &[bool],
    inputs: &[u64],
    eps: Epsilon,
    expansion: &ExpansionMode,
    reduction: Reduction,
    ctx: &mut RunCtx,
) -> Result<A2aOutcome, SimError> {
    let n = schedule.n();
    assert_eq!(inputs.len(), n, "one input value per node");
    let t = schedule.t();
    let start = ctx.round;

    let rmc = run_rmc(schedule, supervisors, eps, expansion, reduction, ctx)?;
    let n_est = rmc.estimate();
    let width = ceil_log2(n_est.max(2));
    for (u, value) in inputs.iter().enumerate() {
        if *value >> width != 0 {
            return Err(SimError::Protocol(format!(
                "input {value} of node {u} does not fit the {width}-bit width \
                 derived from n = {n_est}"
            )));
        }
    }
    let i_min = expansion.i_min_for(schedule, t, n_est)?;
    let r_prime = flood_round_bound(n_est, &i_min, t)?;

    let mut delivered = vec![false; n];
    let mut maps: Vec<BTreeMap<String, u64>> = vec![BTreeMap::new(); n];
    let mut discovery_order = Vec::new();
    let mut epochs: u64 = 0;

    'epochs: loop {
        epochs += 1;
        let mut matching: Vec<bool> = delivered.iter().map(|d| !d).collect();
        let mut new_msg: Vec<String> = vec![String::new(); n];
        for index in 1..=width as u64 {
            let bits: Vec<bool> = inputs
                .iter()
                .map(|v| (v >> (width as u64 - index)) & 1 == 1)
                .collect();
            let ones_init: Vec<bool> = (0..n).map(|u| matching[u] && bits[u]).collect();
            let ones = flood(schedule, &ones_init, r_prime, epochs, index, 1, ctx)?;
            if consensus(&ones, "the one-probe")? {
                for u in 0..n {
                    new_msg[u].push('1');
                    if matching[u] && !bits[u] {
                        matching[u] = false;
                    }
                }
                continue;
            }
            let zeros_init: Vec<bool> =
                (0..n).map(|u| matching[u] && !bits[u]).collect();
            let zeros = flood(schedule, &zeros_init, r_prime, epochs, index, 2, ctx)?;
            if consensus(&zeros, "the zero-probe")? {
                for u in 0..n {
                    new_msg[u].push('0');
                    if matching[u] && bits[u] {
                        matching[u] = false;
                    }
                }
            } else {
                // Neither bit is alive: no undelivered inputs remain.
                break 'epochs;
            }
        }
        let discovered = new_msg[0].clone();
        if new_msg.iter().any(|m| *m != discovered) {
            return Err(SimError::Protocol(
                "nodes assembled different discovered values".into(),
            ));
        }
        discovery_order.push(discovered.clone());
        for u in 0..n {
            if matching[u] {
                delivered[u] = true;
            }
        }
        let bound_ell = supervisors.iter().filter(|s| **s).count() as u64;
        let count = run_multiplicity(
            schedule,
            &matching,
            bound_ell,
            expansion,
            reduction,
            epochs,
            ctx,
        )?;
        for u in 0..n {
            maps[u].insert(discovered.clone(), count.per_node[u]);
        }
    }

    ctx.finish()?;
    Ok(A2aOutcome {
        per_node: maps,
        n: n_est,
        width,
        rounds: ctx.round - start,
        epochs,
        discovery_order,
        rmc,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schedule::ScheduleFamily;

    fn mask(n: usize, ell: usize) -> Vec<bool> {
        (0..n).map(|u| u < ell).collect()
    }

    fn histogram(out: &A2aOutcome) -> &BTreeMap<String, u64> {
        for m in &out.per_node {
            assert_eq!(m, &out.per_node[0], "nodes disagree");
        }
        &out.per_node[0]
    }

    #[test]
    fn pair_with_distinct_inputs() {
        let schedule = ScheduleFamily::StaticClique.build(2, 1, 0).unwrap();
        let mut ctx = RunCtx::new(u64::MAX);
        let out = run_a2a(
            &schedule,
            &mask(2, 1),
            &[1, 0],
            Epsilon::integer(1),
            &ExpansionMode::Exact,
            Reduction::NONE,
            &mut ctx,
        )
        .unwrap();
        assert_eq!(out.n, 2);
        assert_eq!(out.width, 1);
        let h = histogram(&out);
        assert_eq!(h.get("1"), Some(&1));
        assert_eq!(h.get("0"), Some(&1));
        assert_eq!(out.discovery_order, vec!["1", "0"]);
        assert_eq!(out.epochs, 3);
    }

    #[test]
    fn triangle_with_repeats() {
        let schedule = ScheduleFamily::StaticClique.build(3, 1, 0).unwrap();
        let mut ctx = RunCtx::new(u64::MAX);
        let out = run_a2a(
            &schedule,
            &mask(3, 1),
            &[2, 2, 1],
            Epsilon::integer(1),
            &ExpansionMode::Exact,
            Reduction::NONE,
            &mut ctx,
        )
        .unwrap();
        assert_eq!(out.n, 3);
        assert_eq!(out.width, 2);
        let h = histogram(&out);
        assert_eq!(h.get("10"), Some(&2));
        assert_eq!(h.get("01"), Some(&1));
        assert_eq!(h.len(), 2);
        assert_eq!(out.discovery_order, vec!["10", "01"]);
    }

    #[test]
    fn discovery_is_decreasing() {
        let schedule = ScheduleFamily::StaticPath.build(4, 1, 0).unwrap();
        let mut ctx = RunCtx::new(u64::MAX);
        let out = run_a2a(
            &schedule,
            &mask(4, 1),
            &[0, 3, 1, 2],
            Epsilon::integer(1),
            &ExpansionMode::Exact,
            Reduction::NONE,
            &mut ctx,
        )
        .unwrap();
        assert_eq!(out.discovery_order, vec!["11", "10", "01", "00"]);
        assert_eq!(out.epochs, 5);
        let h = histogram(&out);
        assert_eq!(h.values().sum::<u64>(), 4);
    }

    #[test]
    fn oversized_input_is_rejected() {
        let schedule = ScheduleFamily::StaticClique.build(2, 1, 0).unwrap();
        let mut ctx = RunCtx::new(u64::MAX);
        let err = run_a2a(
            &schedule,
            &mask(2, 1),
            &[2, 0],
            Epsilon::integer(1),
            &ExpansionMode::Exact,
            Reduction::NONE,
            &mut ctx,
        )
        .unwrap_err();
        assert!(matches!(err, SimError::Protocol(_)));
    }
}
