//! Periodic evolving-graph schedules and their window-level expansion oracles.
//!
//! A schedule fixes the communication graph of every round by cycling through
//! a finite period. Connectivity is judged per window of `T` consecutive
//! rounds: starting from any node, repeatedly closing under each round's
//! connected components must cover every vertex. This must hold for every
//! window placement, not only for windows aligned to multiples of `T`.

use num::rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{
    full_mask, isoperimetric_number, ConstituentGraph, GraphError,
};
use crate::matrix::{share_matrix, window_product};

#[derive(Debug, Error)]
pub enum ScheduleError {
    #[error("schedule header must be `n=<count> T=<window>`")]
    BadHeader,
    #[error("line {0}: expected `t=<round>: u-v,u-v,...`")]
    BadLine(usize),
    #[error("line {0}: rounds must appear in order starting at t=0")]
    RoundOrder(usize),
    #[error("line {line}: {source}")]
    Graph {
        line: usize,
        source: GraphError,
    },
    #[error("schedule has no rounds")]
    Empty,
    #[error("family does not support n = {0}")]
    UnsupportedSize(usize),
    #[error("no {t}-connected schedule found in {attempts} attempts")]
    GenerationFailed { t: u32, attempts: u32 },
}

/// Named schedule constructions selectable from configuration.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "family")]
pub enum ScheduleFamily {
    /// Complete graph every round.
    StaticClique,
    /// Path graph every round.
    StaticPath,
    /// Period-2 alternation between two intra-half stars and a cross
    /// matching; every length-2 window is connected.
    MatchingAlternation,
    /// Seeded random rounds, one spanning tree embedded per window, with the
    /// whole period verified connected at every window placement.
    RandomConnected { windows: usize },
}

impl ScheduleFamily {
    pub fn name(&self) -> &'static str {
        match self {
            ScheduleFamily::StaticClique => "static-clique",
            ScheduleFamily::StaticPath => "static-path",
            ScheduleFamily::MatchingAlternation => "matching-alternation",
            ScheduleFamily::RandomConnected { .. } => "random-connected",
        }
    }

    pub fn build(&self, n: usize, t: u32, seed: u64) -> Result<Schedule, ScheduleError> {
        match self {
            ScheduleFamily::StaticClique => Schedule::static_graph(
                ConstituentGraph::clique(n),
                t,
                "static-clique",
            ),
            ScheduleFamily::StaticPath => Schedule::static_graph(
                ConstituentGraph::path(n),
                t,
                "static-path",
            ),
            ScheduleFamily::MatchingAlternation => Schedule::matching_alternation(n),
            ScheduleFamily::RandomConnected { windows } => {
                Schedule::random_connected(n, t, *windows, seed)
            }
        }
    }
}

/// A periodic round schedule together with its advertised window size.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Schedule {
    n: usize,
    t: u32,
    period: Vec<ConstituentGraph>,
    label: String,
}

impl Schedule {
    pub fn from_period(
        n: usize,
        t: u32,
        period: Vec<ConstituentGraph>,
        label: &str,
    ) -> Result<Self, ScheduleError> {
        if period.is_empty() {
            return Err(ScheduleError::Empty);
        }
        assert!(t >= 1, "window size must be positive");
        for g in &period {
            assert_eq!(g.n(), n, "period graph on wrong vertex count");
        }
        Ok(Schedule { n, t, period, label: label.to_string() })
    }

    pub fn static_graph(
        g: ConstituentGraph,
        t: u32,
        label: &str,
    ) -> Result<Self, ScheduleError> {
        let n = g.n();
        Schedule::from_period(n, t, vec![g], label)
    }

    /// Even rounds join each half behind a star center; odd rounds pair the
    /// halves by a cross matching (the odd vertex, if any, shares the first
    /// cross partner). Per-round degrees stay at most `ceil(n/2) - 1`, yet
    /// every length-2 window is connected.
    pub fn matching_alternation(n: usize) -> Result<Self, ScheduleError> {
        if n < 2 {
            return Err(ScheduleError::UnsupportedSize(n));
        }
        if n == 2 {
            return Schedule::from_period(
                2,
                2,
                vec![ConstituentGraph::clique(2)],
                "matching-alternation",
            );
        }
        let h = n.div_ceil(2);
        let low = full_mask(h);
        let high = full_mask(n) & !low;
        let even = ConstituentGraph::union(&[
            &ConstituentGraph::star_on(n, 0, low),
            &ConstituentGraph::star_on(n, h as u32, high),
        ]);
        let mut cross: Vec<(u32, u32)> = (0..(n - h) as u32)
            .map(|i| (i, h as u32 + i))
            .collect();
        if n % 2 == 1 {
            cross.push((h as u32 - 1, h as u32));
        }
        let odd = ConstituentGraph::new(n, &cross).expect("cross matching");
        let sched = Schedule::from_period(n, 2, vec![even, odd], "matching-alternation")?;
        debug_assert!(sched.is_t_connected());
        Ok(sched)
    }

    /// Each window of the period gets a fresh spanning tree in one uniformly
    /// chosen round plus sparse random edges everywhere. Generation retries
    /// with successor seeds until the whole period passes the every-offset
    /// connectivity check, so the returned schedule is always valid.
    pub fn random_connected(
        n: usize,
        t: u32,
        windows: usize,
        seed: u64,
    ) -> Result<Self, ScheduleError> {
        if n < 2 {
            return Err(ScheduleError::UnsupportedSize(n));
        }
        let windows = windows.max(1);
        const ATTEMPTS: u32 = 1000;
        for attempt in 0..ATTEMPTS {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(attempt as u64));
            let mut period = Vec::with_capacity(windows * t as usize);
            for _ in 0..windows {
                let tree_round = rng.gen_range(0..t);
                for r in 0..t {
                    let mut edges = Vec::new();
                    if r == tree_round {
                        edges.extend(random_spanning_tree(n, &mut rng));
                    }
                    for u in 0..n as u32 {
                        for v in (u + 1)..n as u32 {
                            if rng.gen_range(0u32..4) == 0 {
                                edges.push((u, v));
                            }
                        }
                    }
                    period.push(ConstituentGraph::new(n, &edges).expect("random round"));
                }
            }
            let sched = Schedule::from_period(n, t, period, "random-connected")?;
            if sched.is_t_connected() {
                return Ok(sched);
            }
        }
        Err(ScheduleError::GenerationFailed { t, attempts: ATTEMPTS })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Advertised connectivity window size.
    pub fn t(&self) -> u32 {
        self.t
    }

    pub fn period_len(&self) -> usize {
        self.period.len()
    }

    pub fn period(&self) -> &[ConstituentGraph] {
        &self.period
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn graph_at(&self, round: u64) -> &ConstituentGraph {
        &self.period[(round % self.period.len() as u64) as usize]
    }

    /// Largest per-round degree across the period.
    pub fn max_degree(&self) -> usize {
        self.period.iter().map(|g| g.max_degree()).max().unwrap_or(0)
    }

    /// Checks the advertised window size at every placement.
    pub fn is_t_connected(&self) -> bool {
        self.is_window_connected(self.t)
    }

    /// True iff from every start round and every vertex, closing under each
    /// of the next `t` rounds' components reaches the whole vertex set.
    pub fn is_window_connected(&self, t: u32) -> bool {
        let all = full_mask(self.n);
        for offset in 0..self.period.len() as u64 {
            for u in 0..self.n {
                let mut set = 1u64 << u;
                for i in 0..t as u64 {
                    set = self.graph_at(offset + i).component_closure(set);
                    if set == all {
                        break;
                    }
                }
                if set != all {
                    return false;
                }
            }
        }
        true
    }

    /// Relabel vertices in every round: vertex `u` becomes `perm[u]`.
    pub fn permuted(&self, perm: &[u32]) -> Schedule {
        Schedule {
            n: self.n,
            t: self.t,
            period: self.period.iter().map(|g| g.relabel(perm)).collect(),
            label: self.label.clone(),
        }
    }

    /// Plain-text round listing; inverse of [`Schedule::parse`].
    pub fn render(&self) -> String {
        let mut out = format!("n={} T={}\n", self.n, self.t);
        for (r, g) in self.period.iter().enumerate() {
            let edges: Vec<String> = g
                .edges()
                .iter()
                .map(|(u, v)| format!("{u}-{v}"))
                .collect();
            out.push_str(&format!("t={}: {}\n", r, edges.join(",")));
        }
        out
    }

    /// Parses the plain-text format:
    ///
    /// ```text
    /// n=4 T=2
    /// t=0: 0-1,2-3
    /// t=1: 0-2,1-3
    /// ```
    ///
    /// Rounds must be listed contiguously from zero; a round with no edges is
    /// written `t=<r>:` with nothing after the colon. Blank lines and lines
    /// starting with `#` are skipped.
    pub fn parse(text: &str) -> Result<Schedule, ScheduleError> {
        let mut n: Option<usize> = None;
        let mut t: Option<u32> = None;
        let mut period: Vec<ConstituentGraph> = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if n.is_none() {
                for tok in line.split_whitespace() {
                    if let Some(v) = tok.strip_prefix("n=") {
                        n = Some(v.parse().map_err(|_| ScheduleError::BadHeader)?);
                    } else if let Some(v) = tok.strip_prefix("T=") {
                        t = Some(v.parse().map_err(|_| ScheduleError::BadHeader)?);
                    } else {
                        return Err(ScheduleError::BadHeader);
                    }
                }
                if n.is_none() || t.is_none() {
                    return Err(ScheduleError::BadHeader);
                }
                continue;
            }
            let rest = line
                .strip_prefix("t=")
                .ok_or(ScheduleError::BadLine(line_no))?;
            let (round, edges_part) = rest
                .split_once(':')
                .ok_or(ScheduleError::BadLine(line_no))?;
            let round: usize = round
                .trim()
                .parse()
                .map_err(|_| ScheduleError::BadLine(line_no))?;
            if round != period.len() {
                return Err(ScheduleError::RoundOrder(line_no));
            }
            let mut edges = Vec::new();
            for tok in edges_part.split(',') {
                let tok = tok.trim();
                if tok.is_empty() {
                    continue;
                }
                let (u, v) = tok
                    .split_once('-')
                    .ok_or(ScheduleError::BadLine(line_no))?;
                let u: u32 = u.trim().parse().map_err(|_| ScheduleError::BadLine(line_no))?;
                let v: u32 = v.trim().parse().map_err(|_| ScheduleError::BadLine(line_no))?;
                edges.push((u, v));
            }
            let g = ConstituentGraph::new(n.unwrap(), &edges)
                .map_err(|source| ScheduleError::Graph { line: line_no, source })?;
            period.push(g);
        }
        match (n, t) {
            (Some(n), Some(t)) => Schedule::from_period(n, t, period, "file"),
            _ => Err(ScheduleError::BadHeader),
        }
    }
}

fn random_spanning_tree(n: usize, rng: &mut ChaCha8Rng) -> Vec<(u32, u32)> {
    let mut order: Vec<u32> = (0..n as u32).collect();
    for i in (1..n).rev() {
        let j = rng.gen_range(0..=i);
        order.swap(i, j);
    }
    let mut edges = Vec::with_capacity(n - 1);
    for i in 1..n {
        let parent = order[rng.gen_range(0..i)];
        let child = order[i];
        edges.push((parent.min(child), parent.max(child)));
    }
    edges
}

/// Exact expansion quantities minimized over every window placement of a
/// periodic schedule. These certify the whole run: any aligned sequence of
/// windows the dynamics actually sees is bounded below by them.
pub struct WindowOracle<'a> {
    schedule: &'a Schedule,
    t: u32,
}

impl<'a> WindowOracle<'a> {
    pub fn new(schedule: &'a Schedule, t: u32) -> Self {
        assert!(t >= 1);
        WindowOracle { schedule, t }
    }

    /// Isoperimetric number of the union graph of the window starting at
    /// `offset`.
    pub fn window_isoperimetric(&self, offset: u64) -> Result<BigRational, GraphError> {
        let graphs: Vec<&ConstituentGraph> = (0..self.t as u64)
            .map(|i| self.schedule.graph_at(offset + i))
            .collect();
        let union = ConstituentGraph::union(&graphs);
        isoperimetric_number(&union)
    }

    /// Conductance of the share-matrix product of the window starting at
    /// `offset`, at common denominator `d`.
    pub fn window_conductance(&self, offset: u64, d: u64) -> Result<BigRational, GraphError> {
        let mats: Result<Vec<_>, _> = (0..self.t as u64)
            .map(|i| share_matrix(self.schedule.graph_at(offset + i), d))
            .collect();
        window_product(&mats?).conductance()
    }

    /// Minimum isoperimetric number of a window's union graph.
    pub fn i_min(&self) -> Result<BigRational, GraphError> {
        let mut best: Option<BigRational> = None;
        for offset in 0..self.schedule.period_len() as u64 {
            let val = self.window_isoperimetric(offset)?;
            if best.as_ref().map_or(true, |b| &val < b) {
                best = Some(val);
            }
        }
        Ok(best.expect("period is nonempty"))
    }

    /// Minimum conductance of a window's share-matrix product at common
    /// denominator `d`.
    pub fn phi_min(&self, d: u64) -> Result<BigRational, GraphError> {
        let mut best: Option<BigRational> = None;
        for offset in 0..self.schedule.period_len() as u64 {
            let val = self.window_conductance(offset, d)?;
            if best.as_ref().map_or(true, |b| &val < b) {
                best = Some(val);
            }
        }
        Ok(best.expect("period is nonempty"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::rat;

    #[test]
    fn static_clique_is_one_connected() {
        let s = ScheduleFamily::StaticClique.build(5, 1, 0).unwrap();
        assert!(s.is_window_connected(1));
        assert_eq!(s.period_len(), 1);
    }

    #[test]
    fn four_node_alternation_is_two_connected() {
        let s = Schedule::matching_alternation(4).unwrap();
        assert_eq!(s.max_degree(), 1);
        assert!(s.is_window_connected(2));
        assert!(!s.is_window_connected(1));
    }

    #[test]
    fn matching_alternation_sizes() {
        for n in 2..=12 {
            let s = Schedule::matching_alternation(n).unwrap();
            assert!(s.is_window_connected(2), "n = {n}");
        }
    }

    #[test]
    fn disjoint_matchings_fail_window_check_beyond_four() {
        // Two perfect matchings on six vertices never connect a window: two
        // rounds of single-hop pairings reach at most four vertices.
        let a = ConstituentGraph::new(6, &[(0, 1), (2, 3), (4, 5)]).unwrap();
        let b = ConstituentGraph::new(6, &[(0, 5), (1, 2), (3, 4)]).unwrap();
        let s = Schedule::from_period(6, 2, vec![a, b], "bad").unwrap();
        assert!(!s.is_window_connected(2));
    }

    #[test]
    fn random_schedule_is_connected_at_every_offset() {
        let s = Schedule::random_connected(6, 2, 3, 7).unwrap();
        assert_eq!(s.period_len(), 6);
        assert!(s.is_window_connected(2));
        // Same seed, same schedule.
        let again = Schedule::random_connected(6, 2, 3, 7).unwrap();
        assert_eq!(s, again);
    }

    #[test]
    fn parse_render_round_trip() {
        let s = Schedule::matching_alternation(5).unwrap();
        let text = s.render();
        let parsed = Schedule::parse(&text).unwrap();
        assert_eq!(parsed.n(), 5);
        assert_eq!(parsed.t(), 2);
        assert_eq!(parsed.period(), s.period());
    }

    #[test]
    fn parse_rejects_gapped_rounds() {
        let text = "n=3 T=1\nt=0: 0-1,1-2\nt=2: 0-2\n";
        assert!(matches!(Schedule::parse(text), Err(ScheduleError::RoundOrder(3))));
    }

    #[test]
    fn parse_accepts_comments_and_empty_rounds() {
        let text = "# demo\nn=3 T=2\nt=0: 0-1,1-2\n\nt=1:\n";
        let s = Schedule::parse(text).unwrap();
        assert_eq!(s.period_len(), 2);
        assert_eq!(s.graph_at(1).edge_count(), 0);
    }

    #[test]
    fn window_oracle_static_path() {
        let s = ScheduleFamily::StaticPath.build(4, 1, 0).unwrap();
        let oracle = WindowOracle::new(&s, 1);
        assert_eq!(oracle.i_min().unwrap(), rat(1, 2));
        // One round of the 4-path at d = 4 moves 1/4 across the middle cut.
        assert_eq!(oracle.phi_min(4).unwrap(), rat(1, 8));
    }

    #[test]
    fn window_oracle_alternation() {
        let s = Schedule::matching_alternation(4).unwrap();
        let oracle = WindowOracle::new(&s, 2);
        // Each window union is connected, worst cut isolates one vertex pair.
        assert!(oracle.i_min().unwrap() > rat(0, 1));
        assert!(oracle.phi_min(4).unwrap() > rat(0, 1));
    }

    #[test]
    fn permuted_schedule_stays_connected() {
        let s = Schedule::matching_alternation(5).unwrap();
        let p = s.permuted(&[4, 2, 0, 1, 3]);
        assert!(p.is_window_connected(2));
    }
}
