//! Size estimation by supervised potential collection. Each epoch evaluates
//! a running estimate `k`: supervised nodes start with potential `ell` and
//! everyone gossips truncated shares; supervisors sweep their holdings into
//! an accumulator at every phase end. Degree and threshold alarms catch low
//! estimates early, and the accumulator range separates low, high, and
//! correct at the epoch's end. The estimate moves by exponential search
//! until it overshoots, then by binary search.
//!
//! Rounds are exact integer arithmetic on share numerators, so the dynamic
//! state of an epoch eventually recurs; both the round loop and the phase
//! loop detect exact recurrences and skip ahead without changing any value
//! a node would compute.

use num::bigint::BigUint;
use num::rational::{BigRational, Ratio};
use num::{BigInt, Zero};

use crate::numerics::{potential_update, Potential};
use crate::params::{derive_rmc_params, share_denominator, Epsilon, RmcEpochParams};
use crate::protocol::{congestion_bound, ExpansionMode, Message, Reduction, Status};
use crate::rational::upow;
use crate::schedule::Schedule;
use crate::sim::{deliver, CycleDetector, RunCtx, SimError, TraceRecord};

/// Hard ceiling on evaluated epochs. The estimate search is logarithmic in
/// the system size, so reaching this means an invariant broke.
const EPOCH_GUARD: usize = 4096;

/// Analysis-facing snapshot of one evaluated estimate.
#[derive(Debug, Clone)]
pub struct EpochReport {
    pub k: u64,
    pub params: RmcEpochParams,
    /// Largest node potential when phase 1 ends, before the threshold rule.
    pub phase1_max_phi: BigRational,
    /// True when the phase-1 threshold rule fired anywhere.
    pub phase1_alarm: bool,
    /// Whether every node was low once phase 2 ended; None when p < 2.
    pub all_low_after_phase2: Option<bool>,
    /// Final accumulator of each supervisor, exact, in node order.
    pub rho: Vec<BigRational>,
    /// Unanimous status after dissemination.
    pub outcome: Status,
    pub rounds: u64,
}

#[derive(Debug, Clone)]
pub struct RmcOutcome {
    /// Every node's returned estimate.
    pub per_node: Vec<u64>,
    pub rounds: u64,
    /// Estimates evaluated, in epoch order.
    pub estimate_path: Vec<u64>,
    pub epochs: Vec<EpochReport>,
}

impl RmcOutcome {
    pub fn estimate(&self) -> u64 {
        self.per_node[0]
    }
}

/// The exact dynamic state the recurrence detectors compare. Accumulators
/// are excluded: no round reads them.
#[derive(Debug, Clone, PartialEq, Eq)]
struct GossipState {
    offset: u64,
    num: Vec<BigUint>,
    status: Vec<Status>,
}

pub fn run_rmc(
    schedule: &Schedule,
    supervisors: &[bool],
    eps: Epsilon,
    expansion: &ExpansionMode,
    reduction: Reduction,
    ctx: &mut RunCtx,
) -> Result<RmcOutcome, SimError> {
    let n = schedule.n();
    assert_eq!(supervisors.len(), n, "one supervisor flag per node");
    let ell = supervisors.iter().filter(|s| **s).count() as u64;
    if ell == 0 || ell >= n as u64 {
        return Err(SimError::Protocol(format!(
            "supervisor count {ell} must satisfy 0 < ell < n = {n}"
        )));
    }
    let t = schedule.t();
    let start = ctx.round;
    let mut estimate_path = Vec::new();
    let mut epochs: Vec<EpochReport> = Vec::new();
    let mut k = ell + 1;
    let mut min = k;
    let mut max: Option<u64> = None;
    loop {
        if epochs.len() >= EPOCH_GUARD {
            return Err(SimError::Protocol(
                "estimate search did not converge".into(),
            ));
        }
        let (_, d) = share_denominator(k, eps)?;
        let info = expansion.info(schedule, t, d)?;
        let mut params = derive_rmc_params(k, ell, t, eps, &info)?;
        params =
            params.scaled_down(reduction.p_div, reduction.r_div, reduction.c_div);
        let epoch_index = estimate_path.len() as u64 + 1;
        let report = run_epoch(schedule, supervisors, &params, epoch_index, ctx)?;
        estimate_path.push(k);
        let outcome = report.outcome;
        epochs.push(report);
        match outcome {
            Status::Done => break,
            Status::Low => {
                min = k + 1;
                k = match max {
                    None => 2 * k,
                    Some(mx) => (min + mx) / 2,
                };
            }
            Status::High => {
                let mx = k - 1;
                max = Some(mx);
                k = (min + mx) / 2;
            }
            Status::Probing => {}
        }
    }
    ctx.finish()?;
    Ok(RmcOutcome {
        per_node: vec![k; n],
        rounds: ctx.round - start,
        estimate_path,
        epochs,
    })
}

fn big_ratio(num: BigUint, den: BigUint) -> BigRational {
    Ratio::new(BigInt::from(num), BigInt::from(den))
}

fn run_epoch(
    schedule: &Schedule,
    supervisors: &[bool],
    params: &RmcEpochParams,
    epoch_index: u64,
    ctx: &mut RunCtx,
) -> Result<EpochReport, SimError> {
    let n = schedule.n();
    let fp = params.fixed_point();
    let scale = fp.scale();
    let period = schedule.period_len() as u64;
    let pinned = BigUint::from(params.ell) * &scale;
    let epoch_start = ctx.round;

    let mut status = vec![Status::Probing; n];
    let mut num: Vec<BigUint> = (0..n)
        .map(|u| if supervisors[u] { BigUint::zero() } else { pinned.clone() })
        .collect();
    let mut rho: Vec<BigUint> = vec![BigUint::zero(); n];

    ctx.audit
        .set_bound(Some(congestion_bound(params.ell, params.c, params.d)));

    // Integer form of "phi > tau": num * q > ell * (q - ell) * scale.
    let tau_rhs =
        BigUint::from(params.ell) * BigUint::from(params.q - params.ell) * &scale;

    let mut phase1_max_phi = BigRational::zero();
    let mut phase1_alarm = false;
    let mut all_low_after_phase2 = None;

    let mut phase_det: CycleDetector<GossipState, Vec<BigUint>> = CycleDetector::new();
    let mut scratch = GossipState {
        offset: 0,
        num: num.clone(),
        status: status.clone(),
    };
    let mut phase: u64 = 1;
    while phase <= params.p {
        // The phase map is uniform from phase 2 onward (the threshold rule
        // exists only at phase 1), so recurrences of the phase-start state
        // advance the remaining phases arithmetically: the accumulators
        // gain a fixed amount per cycle.
        if phase >= 2 && ctx.fast_forward_enabled() {
            scratch.offset = ctx.round % period;
            scratch.num.clone_from(&num);
            scratch.status.clone_from(&status);
            if let Some((lam, anchor_rho)) = phase_det.observe(&scratch, &rho) {
                let phases_left = params.p - phase + 1;
                let cycles = phases_left / lam;
                if cycles > 0 {
                    for u in 0..n {
                        let delta = &rho[u] - &anchor_rho[u];
                        rho[u] += delta * BigUint::from(cycles);
                    }
                    ctx.skip_rounds(cycles * lam * params.r)?;
                    phase += cycles * lam;
                    phase_det.reset();
                    continue;
                }
            }
        }
        run_phase(
            schedule,
            params,
            phase,
            epoch_index,
            &pinned,
            &mut status,
            &mut num,
            ctx,
        )?;
        if phase == 1 {
            let max_num = num.iter().max().expect("nonempty").clone();
            phase1_max_phi = big_ratio(max_num, scale.clone());
            for u in 0..n {
                if &num[u] * BigUint::from(params.q) > tau_rhs {
                    status[u] = Status::Low;
                    num[u] = pinned.clone();
                    phase1_alarm = true;
                }
            }
        }
        for u in 0..n {
            if supervisors[u] && status[u].is_probing() {
                rho[u] += std::mem::take(&mut num[u]);
            }
        }
        if phase == 2 {
            all_low_after_phase2 = Some(status.iter().all(|s| *s == Status::Low));
        }
        phase += 1;
    }

    // Accumulator decision, exact: rho >= (k-ell)(1 - k^-gamma) becomes
    // rho_num * k^gamma >= (k-ell)(k^gamma - 1) * scale, likewise above.
    let k_gamma = upow(params.k, params.gamma);
    let spread = BigUint::from(params.k - params.ell);
    let lo_rhs = &spread * (&k_gamma - 1u32) * &scale;
    let hi_rhs = &spread * (&k_gamma + 1u32) * &scale;
    for u in 0..n {
        if supervisors[u] && status[u].is_probing() {
            let lhs = &rho[u] * &k_gamma;
            status[u] = if lhs < lo_rhs {
                Status::High
            } else if lhs > hi_rhs {
                Status::Low
            } else {
                Status::Done
            };
        }
    }

    // Dissemination: d rounds of status broadcast. Supervisors never adopt;
    // supervised nodes copy any received non-probing status.
    for dround in 1..=params.d {
        let round_idx = ctx.take_round()?;
        let g = schedule.graph_at(round_idx);
        let msgs: Vec<Message> = status
            .iter()
            .map(|s| Message::Notice { status: *s })
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
                    phase: params.p + 1,
                    block: dround,
                    round_in_phase: dround,
                    sent: msgs[u].render(),
                    sent_bits: msgs[u].bit_width(),
                    received_count: inboxes[u].len() as u32,
                    phi: Potential::from_numerator(num[u].clone()).exact_string(fp),
                    status: status[u].name().into(),
                };
                ctx.trace(&rec)?;
            }
        }
        for u in 0..n {
            if supervisors[u] {
                continue;
            }
            let adopted = inboxes[u].iter().find_map(|m| match m {
                Message::Notice { status: s } if !s.is_probing() => Some(*s),
                _ => None,
            });
            if let Some(s) = adopted {
                debug_assert!(
                    inboxes[u].iter().all(|m| match m {
                        Message::Notice { status: x } => x.is_probing() || *x == s,
                        _ => false,
                    }),
                    "conflicting statuses during dissemination"
                );
                status[u] = s;
            }
        }
    }

    let outcome = status[0];
    if status.iter().any(|s| *s != outcome) {
        return Err(SimError::Protocol(format!(
            "statuses diverged after dissemination at estimate {}",
            params.k
        )));
    }

    let rho_exact: Vec<BigRational> = (0..n)
        .filter(|u| supervisors[*u])
        .map(|u| big_ratio(rho[u].clone(), scale.clone()))
        .collect();
    let rounds = ctx.round - epoch_start;
    debug_assert_eq!(rounds, params.epoch_rounds());

    Ok(EpochReport {
        k: params.k,
        params: params.clone(),
        phase1_max_phi,
        phase1_alarm,
        all_low_after_phase2,
        rho: rho_exact,
        outcome,
        rounds,
    })
}

#[allow(clippy::too_many_arguments)]
fn run_phase(
    schedule: &Schedule,
    params: &RmcEpochParams,
    phase: u64,
    epoch_index: u64,
    pinned: &BigUint,
    status: &mut [Status],
    num: &mut [BigUint],
    ctx: &mut RunCtx,
) -> Result<(), SimError> {
    let n = schedule.n();
    let fp = params.fixed_point();
    let period = schedule.period_len() as u64;
    let mut det: CycleDetector<GossipState> = CycleDetector::new();
    let mut scratch = GossipState {
        offset: 0,
        num: num.to_vec(),
        status: status.to_vec(),
    };
    let mut jumped = !ctx.fast_forward_enabled();
    let mut rip: u64 = 1;
    while rip <= params.r {
        let round_idx = ctx.take_round()?;
        let g = schedule.graph_at(round_idx);
        let msgs: Vec<Message> = (0..n)
            .map(|u| Message::Share {
                num: &num[u] / params.d,
                status: status[u],
            })
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
                    phase,
                    block: (rip - 1) / params.t as u64 + 1,
                    round_in_phase: rip,
                    sent: msgs[u].render(),
                    sent_bits: msgs[u].bit_width(),
                    received_count: inboxes[u].len() as u32,
                    phi: Potential::from_numerator(num[u].clone()).exact_string(fp),
                    status: status[u].name().into(),
                };
                ctx.trace(&rec)?;
            }
        }
        for u in 0..n {
            let inbox = &inboxes[u];
            let degree = inbox.len() as u64;
            let all_probing = inbox.iter().all(|m| match m {
                Message::Share { status: s, .. } => s.is_probing(),
                _ => false,
            });
            if status[u].is_probing() && degree < params.q && all_probing {
                let shares: Vec<Potential> = inbox
                    .iter()
                    .map(|m| match m {
                        Message::Share { num: s, .. } => {
                            Potential::from_numerator((*s).clone())
                        }
                        _ => unreachable!("probing rounds carry shares"),
                    })
                    .collect();
                let updated = potential_update(
                    &Potential::from_numerator(num[u].clone()),
                    &shares,
                    fp,
                )
                .expect("degree stays below d/2");
                num[u] = updated.into_numerator();
            } else {
                status[u] = Status::Low;
                num[u] = pinned.clone();
            }
        }
        rip += 1;
        if !jumped && rip <= params.r {
            scratch.offset = ctx.round % period;
            scratch.num.clone_from_slice(num);
            scratch.status.clone_from_slice(status);
            if let Some((lam, ())) = det.observe(&scratch, &()) {
                let left = params.r - rip + 1;
                let cycles = left / lam;
                if cycles > 0 {
                    ctx.skip_rounds(cycles * lam)?;
                    rip += cycles * lam;
                }
                jumped = true;
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schedule::ScheduleFamily;

    fn mask(n: usize, ell: usize) -> Vec<bool> {
        (0..n).map(|u| u < ell).collect()
    }

    fn exact() -> ExpansionMode {
        ExpansionMode::Exact
    }

    #[test]
    fn pair_resolves_in_one_epoch() {
        let schedule = ScheduleFamily::StaticClique.build(2, 1, 0).unwrap();
        let mut ctx = RunCtx::new(u64::MAX);
        let out = run_rmc(
            &schedule,
            &mask(2, 1),
            Epsilon::integer(1),
            &exact(),
            Reduction::NONE,
            &mut ctx,
        )
        .unwrap();
        assert_eq!(out.per_node, vec![2, 2]);
        assert_eq!(out.estimate_path, vec![2]);
        assert_eq!(out.epochs.len(), 1);
        assert_eq!(out.epochs[0].outcome, Status::Done);
        assert_eq!(out.rounds, out.epochs[0].params.epoch_rounds());
    }

    #[test]
    fn triangle_searches_low_high_done() {
        let schedule = ScheduleFamily::StaticClique.build(3, 1, 0).unwrap();
        let mut ctx = RunCtx::new(u64::MAX);
        let out = run_rmc(
            &schedule,
            &mask(3, 1),
            Epsilon::integer(1),
            &exact(),
            Reduction::NONE,
            &mut ctx,
        )
        .unwrap();
        assert_eq!(out.per_node, vec![3, 3, 3]);
        assert_eq!(out.estimate_path, vec![2, 4, 3]);
        let outcomes: Vec<Status> = out.epochs.iter().map(|e| e.outcome).collect();
        assert_eq!(outcomes, vec![Status::Low, Status::High, Status::Done]);
    }

    #[test]
    fn two_supervisors_on_a_path() {
        let schedule = ScheduleFamily::StaticPath.build(3, 1, 0).unwrap();
        let mut ctx = RunCtx::new(u64::MAX);
        let out = run_rmc(
            &schedule,
            &mask(3, 2),
            Epsilon::integer(1),
            &exact(),
            Reduction::NONE,
            &mut ctx,
        )
        .unwrap();
        assert_eq!(out.per_node, vec![3, 3, 3]);
        assert_eq!(out.estimate_path, vec![3]);
    }

    #[test]
    fn alternating_matchings_are_counted() {
        let schedule = ScheduleFamily::MatchingAlternation.build(4, 2, 0).unwrap();
        let mut ctx = RunCtx::new(u64::MAX);
        let out = run_rmc(
            &schedule,
            &mask(4, 1),
            Epsilon::integer(1),
            &exact(),
            Reduction::NONE,
            &mut ctx,
        )
        .unwrap();
        assert_eq!(out.per_node, vec![4, 4, 4, 4]);
        assert_eq!(out.estimate_path, vec![2, 4]);
    }

    #[test]
    fn fast_forward_changes_nothing() {
        let schedule = ScheduleFamily::StaticPath.build(4, 1, 0).unwrap();
        let run = |ff: bool| {
            let mut ctx = RunCtx::new(u64::MAX);
            if !ff {
                ctx = ctx.without_fast_forward();
            }
            let out = run_rmc(
                &schedule,
                &mask(4, 1),
                Epsilon::integer(1),
                &exact(),
                Reduction::NONE,
                &mut ctx,
            )
            .unwrap();
            (
                out.per_node.clone(),
                out.rounds,
                out.estimate_path.clone(),
                out.epochs
                    .iter()
                    .map(|e| e.rho.clone())
                    .collect::<Vec<_>>(),
            )
        };
        assert_eq!(run(true), run(false));
    }

    #[test]
    fn round_cap_interrupts() {
        let schedule = ScheduleFamily::StaticClique.build(2, 1, 0).unwrap();
        let mut ctx = RunCtx::new(10);
        let err = run_rmc(
            &schedule,
            &mask(2, 1),
            Epsilon::integer(1),
            &exact(),
            Reduction::NONE,
            &mut ctx,
        )
        .unwrap_err();
        assert!(matches!(err, SimError::RoundCap { cap: 10 }));
    }

    #[test]
    fn supervisor_mask_is_validated() {
        let schedule = ScheduleFamily::StaticClique.build(3, 1, 0).unwrap();
        let mut ctx = RunCtx::new(100);
        assert!(run_rmc(
            &schedule,
            &mask(3, 0),
            Epsilon::integer(1),
            &exact(),
            Reduction::NONE,
            &mut ctx,
        )
        .is_err());
        let mut ctx = RunCtx::new(100);
        assert!(run_rmc(
            &schedule,
            &mask(3, 3),
            Epsilon::integer(1),
            &exact(),
            Reduction::NONE,
            &mut ctx,
        )
        .is_err());
    }
}
