//! Reference dynamics computed outside any protocol: exact averaging,
//! truncated averaging on whole state vectors, window contraction traces,
//! and single-hop temporal flooding.
//!
//! Protocol implementations are tested against these oracles, never against
//! themselves.

use num::bigint::BigInt;
use num::rational::BigRational;
use num::One;

use crate::graph::{full_mask, ConstituentGraph, GraphError};
use crate::matrix::{share_matrix, window_product};
use crate::numerics::{
    potential_update_unguarded, truncate_share, FixedPointParams, NumericsError, Potential,
};
use crate::schedule::Schedule;

/// Exact averaging: applies each round's share matrix to the distribution as
/// a row vector. Returns every intermediate state, starting with the input.
pub fn ideal_evolution(
    initial: &[BigRational],
    schedule: &Schedule,
    d: u64,
    rounds: u64,
) -> Result<Vec<Vec<BigRational>>, GraphError> {
    let mut states = Vec::with_capacity(rounds as usize + 1);
    states.push(initial.to_vec());
    for r in 0..rounds {
        let p = share_matrix(schedule.graph_at(r), d)?;
        let next = p.apply_row(states.last().expect("nonempty"));
        states.push(next);
    }
    Ok(states)
}

/// Truncated averaging applied to the whole state vector at once. Uses the
/// unguarded update so denominators right at twice the degree can be probed.
pub fn truncated_evolution(
    initial: &[Potential],
    schedule: &Schedule,
    params: FixedPointParams,
    rounds: u64,
) -> Result<Vec<Vec<Potential>>, NumericsError> {
    let n = initial.len();
    let mut states = Vec::with_capacity(rounds as usize + 1);
    states.push(initial.to_vec());
    for r in 0..rounds {
        let cur = states.last().expect("nonempty");
        let g = schedule.graph_at(r);
        let shares: Vec<Potential> =
            cur.iter().map(|p| truncate_share(p, params)).collect();
        let mut next = Vec::with_capacity(n);
        for u in 0..n {
            let received: Vec<Potential> = g
                .neighbors(u)
                .iter()
                .map(|&v| shares[v as usize].clone())
                .collect();
            next.push(potential_update_unguarded(&cur[u], &received, params)?);
        }
        states.push(next);
    }
    Ok(states)
}

/// One-round comparison of exact and truncated averaging from a common
/// start: how much each node's outgoing share lost to the floor, and how far
/// the two next states end up apart.
#[derive(Debug, Clone)]
pub struct TruncationGap {
    pub ideal_next: Vec<BigRational>,
    pub truncated_next: Vec<BigRational>,
    /// Per node: exact share value minus floored share value.
    pub share_gaps: Vec<BigRational>,
    /// Per node: absolute difference of the two next states.
    pub node_gaps: Vec<BigRational>,
}

pub fn one_round_truncation_gap(
    g: &ConstituentGraph,
    start: &[Potential],
    params: FixedPointParams,
) -> Result<TruncationGap, NumericsError> {
    let n = g.n();
    assert_eq!(start.len(), n);
    let exact_start: Vec<BigRational> = start
        .iter()
        .map(|p| p.value(params))
        .collect();
    let share_gaps: Vec<BigRational> = start
        .iter()
        .map(|p| {
            let exact = p.value(params) / BigRational::from(BigInt::from(params.d));
            let floored = BigRational::new(
                BigInt::from(truncate_share(p, params).into_numerator()),
                BigInt::from(params.scale()),
            );
            exact - floored
        })
        .collect();

    let p_exact = share_matrix(g, params.d).expect("oracle graphs satisfy the degree bound");
    let ideal_next = p_exact.apply_row(&exact_start);

    let shares: Vec<Potential> = start.iter().map(|p| truncate_share(p, params)).collect();
    let mut truncated_next = Vec::with_capacity(n);
    for u in 0..n {
        let received: Vec<Potential> = g
            .neighbors(u)
            .iter()
            .map(|&v| shares[v as usize].clone())
            .collect();
        let next = potential_update_unguarded(&start[u], &received, params)?;
        truncated_next.push(next.value(params));
    }

    let node_gaps = ideal_next
        .iter()
        .zip(&truncated_next)
        .map(|(a, b)| if a >= b { a - b } else { b - a })
        .collect();
    Ok(TruncationGap { ideal_next, truncated_next, share_gaps, node_gaps })
}

/// Squared Euclidean distance of a distribution from uniform.
pub fn squared_distance_from_uniform(dist: &[BigRational]) -> BigRational {
    let n = dist.len();
    let uniform = BigRational::new(BigInt::one(), BigInt::from(n));
    dist.iter()
        .map(|x| {
            let diff = x - &uniform;
            &diff * &diff
        })
        .sum()
}

/// One window of the contraction trace: the squared distance from uniform
/// before and after the window, and the bound implied by the window
/// product's conductance.
#[derive(Debug, Clone)]
pub struct ContractionStep {
    pub conductance: BigRational,
    pub before_sq: BigRational,
    pub after_sq: BigRational,
    pub bound_sq: BigRational,
}

impl ContractionStep {
    pub fn holds(&self) -> bool {
        self.after_sq <= self.bound_sq
    }
}

/// Steps `windows` aligned windows of `t` rounds each from round zero,
/// recording the exact contraction inequality per window.
pub fn window_contraction_trace(
    initial: &[BigRational],
    schedule: &Schedule,
    d: u64,
    t: u32,
    windows: u64,
) -> Result<Vec<ContractionStep>, GraphError> {
    let mut dist = initial.to_vec();
    let mut steps = Vec::with_capacity(windows as usize);
    for w in 0..windows {
        let mats: Result<Vec<_>, _> = (0..t as u64)
            .map(|i| share_matrix(schedule.graph_at(w * t as u64 + i), d))
            .collect();
        let prod = window_product(&mats?);
        let conductance = prod.conductance()?;
        let before_sq = squared_distance_from_uniform(&dist);
        dist = prod.apply_row(&dist);
        let after_sq = squared_distance_from_uniform(&dist);
        let bound_sq =
            (BigRational::one() - &conductance * &conductance) * &before_sq;
        steps.push(ContractionStep { conductance, before_sq, after_sq, bound_sq });
    }
    Ok(steps)
}

/// Rounds of single-hop flooding until `start_set` covers every vertex, or
/// `None` if `horizon` rounds do not suffice. Each round grows the set by
/// exactly one hop along that round's edges.
pub fn temporal_broadcast_time(
    schedule: &Schedule,
    start_set: u64,
    horizon: u64,
) -> Option<u64> {
    assert!(start_set != 0, "broadcast needs a nonempty start set");
    let all = full_mask(schedule.n());
    let mut set = start_set;
    if set == all {
        return Some(0);
    }
    for r in 0..horizon {
        set = schedule.graph_at(r).grow_one_hop(set);
        if set == all {
            return Some(r + 1);
        }
    }
    None
}

/// State of every node's OR bit after `rounds` of single-hop flooding.
pub fn or_flood(schedule: &Schedule, initial: &[bool], rounds: u64) -> Vec<bool> {
    let n = schedule.n();
    assert_eq!(initial.len(), n);
    let mut set = 0u64;
    for (u, &bit) in initial.iter().enumerate() {
        if bit {
            set |= 1 << u;
        }
    }
    for r in 0..rounds {
        if set == 0 {
            break;
        }
        set = schedule.graph_at(r).grow_one_hop(set);
    }
    (0..n).map(|u| set & (1 << u) != 0).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::rat;
    use crate::schedule::ScheduleFamily;
    use num::bigint::BigUint;

    #[test]
    fn ideal_pair_evolution() {
        let s = ScheduleFamily::StaticClique.build(2, 1, 0).unwrap();
        let states =
            ideal_evolution(&[rat(1, 1), rat(0, 1)], &s, 4, 2).unwrap();
        assert_eq!(states[1], vec![rat(3, 4), rat(1, 4)]);
        assert_eq!(states[2], vec![rat(5, 8), rat(3, 8)]);
    }

    #[test]
    fn contraction_on_a_pair() {
        // Start (1, 0): squared distance 1/2. After one round at d = 4 the
        // distribution is (3/4, 1/4): squared distance 1/8. The conductance
        // bound only promises (1 - 1/16) * 1/2 = 15/32.
        let s = ScheduleFamily::StaticClique.build(2, 1, 0).unwrap();
        let steps =
            window_contraction_trace(&[rat(1, 1), rat(0, 1)], &s, 4, 1, 1).unwrap();
        assert_eq!(steps[0].conductance, rat(1, 4));
        assert_eq!(steps[0].before_sq, rat(1, 2));
        assert_eq!(steps[0].after_sq, rat(1, 8));
        assert_eq!(steps[0].bound_sq, rat(15, 32));
        assert!(steps[0].holds());
    }

    #[test]
    fn truncation_gap_on_a_tight_pair() {
        // d = 2, c = 2, start (3/4, 1/4). Shares floor 3/8 to 1/4 and 1/8 to
        // 0, yet both dynamics land exactly on (1/2, 1/2) after one round.
        let g = ConstituentGraph::clique(2);
        let params = FixedPointParams::new(2, 2);
        let start = vec![
            Potential::from_numerator(BigUint::from(3u32)),
            Potential::from_numerator(BigUint::from(1u32)),
        ];
        let gap = one_round_truncation_gap(&g, &start, params).unwrap();
        assert_eq!(gap.share_gaps, vec![rat(1, 8), rat(1, 8)]);
        assert_eq!(gap.ideal_next, vec![rat(1, 2), rat(1, 2)]);
        assert_eq!(gap.truncated_next, vec![rat(1, 2), rat(1, 2)]);
        assert_eq!(gap.node_gaps, vec![rat(0, 1), rat(0, 1)]);
    }

    #[test]
    fn truncated_vector_evolution_conserves_mass() {
        let s = ScheduleFamily::StaticPath.build(4, 1, 0).unwrap();
        let params = FixedPointParams::new(8, 3);
        let start: Vec<Potential> = vec![
            Potential::from_integer(1, params),
            Potential::zero(),
            Potential::zero(),
            Potential::zero(),
        ];
        let states = truncated_evolution(&start, &s, params, 20).unwrap();
        let mass0 = crate::numerics::total_numerator(&states[0]);
        for st in &states {
            assert_eq!(crate::numerics::total_numerator(st), mass0);
        }
    }

    #[test]
    fn broadcast_time_on_a_path() {
        // From one end of a static 4-path, single-hop flooding needs three
        // rounds to cover everything.
        let s = ScheduleFamily::StaticPath.build(4, 1, 0).unwrap();
        assert_eq!(temporal_broadcast_time(&s, 1, 10), Some(3));
        assert_eq!(temporal_broadcast_time(&s, 0b1000, 10), Some(3));
        assert_eq!(temporal_broadcast_time(&s, 0b1111, 10), Some(0));
        assert_eq!(temporal_broadcast_time(&s, 1, 2), None);
    }

    #[test]
    fn or_flood_matches_reachability() {
        let s = Schedule::matching_alternation(6).unwrap();
        let mut initial = vec![false; 6];
        initial[3] = true;
        let after = or_flood(&s, &initial, 4);
        assert!(after.iter().all(|&b| b));
        let after_one = or_flood(&s, &initial, 1);
        assert!(!after_one.iter().all(|&b| b));
    }
}
