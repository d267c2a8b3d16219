//! Multiplicity counting over a known system size: holders of the target
//! value start with potential 1, everyone else with 0, and all nodes gossip
//! truncated shares for a fixed number of rounds. The potential then sits
//! close enough to `delta / n` that every node reads off the exact count by
//! rounding `phi * n` to the nearest integer.

use num::bigint::BigUint;
use num::Zero;

use crate::numerics::{potential_update, Potential};
use crate::params::{derive_mult_params, MultParams};
use crate::protocol::{congestion_bound, ExpansionMode, Message, Reduction};
use crate::schedule::Schedule;
use crate::sim::{deliver, CycleDetector, RunCtx, SimError, TraceRecord};

#[derive(Debug, Clone)]
pub struct MultOutcome {
    /// Each node's count of holders.
    pub per_node: Vec<u64>,
    pub rounds: u64,
    pub params: MultParams,
}

/// State compared by the recurrence detector: the schedule offset and the
/// exact potential numerators.
#[derive(Debug, Clone, PartialEq, Eq)]
struct MassState {
    offset: u64,
    num: Vec<BigUint>,
}

/// Runs one count with `n` taken from the schedule. `bound_ell` only feeds
/// the congestion bound of the enclosing run. Trace rows are labeled with
/// `epoch_index` so embedded counts stay attributable.
pub fn run_multiplicity(
    schedule: &Schedule,
    holders: &[bool],
    bound_ell: u64,
    expansion: &ExpansionMode,
    reduction: Reduction,
    epoch_index: u64,
    ctx: &mut RunCtx,
) -> Result<MultOutcome, SimError> {
    let n = schedule.n();
    assert_eq!(holders.len(), n, "one holder flag per node");
    let t = schedule.t();
    let d = 2 * n as u64;
    let info = expansion.info(schedule, t, d)?;
    let mut params = derive_mult_params(n as u64, t, &info)?;
    params = params.scaled_down(reduction.r_div, reduction.c_div);
    let fp = params.fixed_point();
    let scale = fp.scale();
    let period = schedule.period_len() as u64;
    let start = ctx.round;

    ctx.audit
        .set_bound(Some(congestion_bound(bound_ell.max(1), params.c, params.d)));

    let mut num: Vec<BigUint> = holders
        .iter()
        .map(|h| if *h { scale.clone() } else { BigUint::zero() })
        .collect();

    let mut det: CycleDetector<MassState> = CycleDetector::new();
    let mut scratch = MassState { offset: 0, num: num.clone() };
    let mut jumped = !ctx.fast_forward_enabled();
    let mut rip: u64 = 1;
    while rip <= params.rounds {
        let round_idx = ctx.take_round()?;
        let g = schedule.graph_at(round_idx);
        let msgs: Vec<Message> = (0..n)
            .map(|u| Message::Mass { num: &num[u] / params.d })
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
                    epoch: epoch_index,
                    phase: 1,
                    block: (rip - 1) / t as u64 + 1,
                    round_in_phase: rip,
                    sent: msgs[u].render(),
                    sent_bits: msgs[u].bit_width(),
                    received_count: inboxes[u].len() as u32,
                    phi: Potential::from_numerator(num[u].clone()).exact_string(fp),
                    status: "-".into(),
                };
                ctx.trace(&rec)?;
            }
        }
        for u in 0..n {
            let shares: Vec<Potential> = inboxes[u]
                .iter()
                .map(|m| match m {
                    Message::Mass { num: s } => Potential::from_numerator((*s).clone()),
                    _ => unreachable!("counting rounds carry mass shares"),
                })
                .collect();
            let updated = potential_update(
                &Potential::from_numerator(num[u].clone()),
                &shares,
                fp,
            )
            .expect("degree n-1 stays below d/2 = n");
            num[u] = updated.into_numerator();
        }
        rip += 1;
        if !jumped && rip <= params.rounds {
            scratch.offset = ctx.round % period;
            scratch.num.clone_from_slice(&num);
            if let Some((lam, ())) = det.observe(&scratch, &()) {
                let left = params.rounds - rip + 1;
                let cycles = left / lam;
                if cycles > 0 {
                    ctx.skip_rounds(cycles * lam)?;
                    rip += cycles * lam;
                }
                jumped = true;
            }
        }
    }

    let per_node: Vec<u64> = num
        .iter()
        .map(|m| {
            let rounded = Potential::from_numerator(m.clone())
                .rounded_times(n as u64, fp);
            u64::try_from(&rounded).expect("count fits in 64 bits")
        })
        .collect();
    ctx.finish()?;
    Ok(MultOutcome { per_node, rounds: ctx.round - start, params })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schedule::ScheduleFamily;

    fn holders(n: usize, delta: usize) -> Vec<bool> {
        (0..n).map(|u| u < delta).collect()
    }

    #[test]
    fn pair_counts_one_holder() {
        let schedule = ScheduleFamily::StaticClique.build(2, 1, 0).unwrap();
        let mut ctx = RunCtx::new(u64::MAX);
        let out = run_multiplicity(
            &schedule,
            &holders(2, 1),
            1,
            &ExpansionMode::Exact,
            Reduction::NONE,
            1,
            &mut ctx,
        )
        .unwrap();
        assert_eq!(out.per_node, vec![1, 1]);
        assert_eq!(out.rounds, out.params.rounds);
    }

    #[test]
    fn path_counts_every_multiplicity() {
        let schedule = ScheduleFamily::StaticPath.build(4, 1, 0).unwrap();
        for delta in 0..=4usize {
            let mut ctx = RunCtx::new(u64::MAX);
            let out = run_multiplicity(
                &schedule,
                &holders(4, delta),
                1,
                &ExpansionMode::Exact,
                Reduction::NONE,
                1,
                &mut ctx,
            )
            .unwrap();
            assert_eq!(out.per_node, vec![delta as u64; 4], "delta = {delta}");
        }
    }

    #[test]
    fn alternation_window_two() {
        let schedule = ScheduleFamily::MatchingAlternation.build(5, 2, 0).unwrap();
        let mut ctx = RunCtx::new(u64::MAX);
        let out = run_multiplicity(
            &schedule,
            &holders(5, 3),
            1,
            &ExpansionMode::Exact,
            Reduction::NONE,
            1,
            &mut ctx,
        )
        .unwrap();
        assert_eq!(out.per_node, vec![3; 5]);
    }

    #[test]
    fn fast_forward_changes_nothing() {
        let schedule = ScheduleFamily::StaticPath.build(5, 1, 0).unwrap();
        let run = |ff: bool| {
            let mut ctx = RunCtx::new(u64::MAX);
            if !ff {
                ctx = ctx.without_fast_forward();
            }
            let out = run_multiplicity(
                &schedule,
                &holders(5, 2),
                1,
                &ExpansionMode::Exact,
                Reduction::NONE,
                1,
                &mut ctx,
            )
            .unwrap();
            (out.per_node.clone(), out.rounds)
        };
        assert_eq!(run(true), run(false));
    }
}
