//! End-to-end verification of every property the library claims: exact
//! protocol outputs over a schedule grid, round and width bounds, exact
//! conservation and contraction, and determinism under node relabeling.
//! `Scope::Full` is the acceptance gate; `Scope::Quick` trims the grids
//! for an interactive smoke pass.
//!
//! Every check is exact: a failure list is collected, never a tolerance.

use std::collections::BTreeMap;
use std::io::Write;
use std::sync::{Arc, Mutex};

use num::bigint::BigUint;
use num::rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::graph::{isoperimetric_number, ConstituentGraph};
use crate::matrix::share_matrix;
use crate::numerics::{potential_update, truncate_share, FixedPointParams, Potential};
use crate::oracle::{temporal_broadcast_time, window_contraction_trace};
use crate::params::{derive_rmc_params, flood_round_bound, share_denominator, Epsilon};
use crate::protocol::a2a::{run_a2a, A2aOutcome};
use crate::protocol::multiplicity::run_multiplicity;
use crate::protocol::rmc::{run_rmc, RmcOutcome};
use crate::protocol::{ceil_log2, ExpansionMode, Reduction};
use crate::rational::{big, rat_u, upow};
use crate::schedule::{Schedule, WindowOracle};
use crate::sim::{RunCtx, Tracer};

/// How much of each grid to execute.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scope {
    Quick,
    Full,
}

/// One property's verdict with a human-readable summary.
#[derive(Debug, Clone)]
pub struct CheckReport {
    pub name: &'static str,
    pub pass: bool,
    pub details: String,
}

impl CheckReport {
    fn from_failures(name: &'static str, failures: Vec<String>, summary: String) -> Self {
        if failures.is_empty() {
            CheckReport { name, pass: true, details: summary }
        } else {
            let shown: Vec<&String> = failures.iter().take(3).collect();
            CheckReport {
                name,
                pass: false,
                details: format!(
                    "{} failure(s); first: {}",
                    failures.len(),
                    shown.iter().map(|s| s.as_str()).collect::<Vec<_>>().join(" | ")
                ),
            }
        }
    }
}

/// Runs every check and returns one report per property, in a fixed order.
pub fn run_all(scope: Scope) -> Vec<CheckReport> {
    let grid = rmc_grid(scope);
    let mult = multiplicity_grid(scope);
    let a2a = a2a_grid(scope);
    vec![
        check_rmc_exactness(&grid),
        check_rmc_round_bound(&grid),
        check_multiplicity(&mult),
        check_a2a(&a2a),
        check_conservation(scope),
        check_contraction(scope),
        check_conductance_bound(scope),
        check_broadcast_bound(scope),
        check_alarm_properties(&grid),
        check_congestion(&grid, &mult, &a2a),
        check_determinism_anonymity(),
    ]
}

/// Runs one check by its report name; `None` when the name is unknown.
/// Builds only the grids the check consumes.
pub fn run_check(scope: Scope, name: &str) -> Option<CheckReport> {
    let report = match name {
        "size-discovery-exactness" => check_rmc_exactness(&rmc_grid(scope)),
        "size-discovery-round-bound" => check_rmc_round_bound(&rmc_grid(scope)),
        "multiplicity-exactness" => check_multiplicity(&multiplicity_grid(scope)),
        "all-to-all-histograms" => check_a2a(&a2a_grid(scope)),
        "conservation-nonnegativity" => check_conservation(scope),
        "window-contraction" => check_contraction(scope),
        "conductance-isoperimetric-bound" => check_conductance_bound(scope),
        "broadcast-round-bound" => check_broadcast_bound(scope),
        "alarm-properties" => check_alarm_properties(&rmc_grid(scope)),
        "congestion-audit" => {
            let grid = rmc_grid(scope);
            let mult = multiplicity_grid(scope);
            let a2a = a2a_grid(scope);
            check_congestion(&grid, &mult, &a2a)
        }
        "determinism-anonymity" => check_determinism_anonymity(),
        _ => return None,
    };
    Some(report)
}

const GRID_CAP: u64 = 1_000_000_000_000;

fn grid_eps() -> Epsilon {
    Epsilon::integer(1)
}

fn grid_n_max(scope: Scope) -> usize {
    match scope {
        Scope::Quick => 4,
        Scope::Full => 6,
    }
}

fn grid_seeds(scope: Scope) -> &'static [u64] {
    match scope {
        Scope::Quick => &[11],
        Scope::Full => &[11, 12, 13],
    }
}

fn mask_first(n: usize, count: usize) -> Vec<bool> {
    (0..n).map(|u| u < count).collect()
}

fn relabelled(s: &Schedule, label: &str) -> Schedule {
    Schedule::from_period(s.n(), s.t(), s.period().to_vec(), label).expect("relabel")
}

/// The schedule suite at one (n, T): both static families, the alternation
/// family when its period is T-window connected, and seeded random
/// T-connected schedules.
fn suite(n: usize, t: u32, seeds: &[u64]) -> Vec<Schedule> {
    let mut out = Vec::new();
    out.push(
        Schedule::static_graph(ConstituentGraph::clique(n), t, "static-clique")
            .expect("clique schedule"),
    );
    out.push(
        Schedule::static_graph(ConstituentGraph::path(n), t, "static-path")
            .expect("path schedule"),
    );
    let ma = Schedule::matching_alternation(n).expect("alternation schedule");
    if ma.is_window_connected(t) {
        out.push(
            Schedule::from_period(n, t, ma.period().to_vec(), "matching-alternation")
                .expect("alternation at grid window"),
        );
    }
    for &seed in seeds {
        let s = Schedule::random_connected(n, t, 2, seed).expect("random schedule");
        out.push(relabelled(&s, &format!("random-connected-{seed}")));
    }
    out
}

struct GridRun {
    n: usize,
    ell: usize,
    t: u32,
    label: String,
    schedule: Schedule,
    outcome: Result<RmcOutcome, String>,
    audit_messages: u64,
    audit_violations: u64,
}

impl GridRun {
    fn id(&self) -> String {
        format!("n={} ell={} T={} {}", self.n, self.ell, self.t, self.label)
    }
}

fn rmc_grid(scope: Scope) -> Vec<GridRun> {
    let eps = grid_eps();
    let mut runs = Vec::new();
    for n in 2..=grid_n_max(scope) {
        for t in [1u32, 2] {
            for schedule in suite(n, t, grid_seeds(scope)) {
                for ell in 1..n {
                    let mask = mask_first(n, ell);
                    let mut ctx = RunCtx::new(GRID_CAP);
                    let outcome = run_rmc(
                        &schedule,
                        &mask,
                        eps,
                        &ExpansionMode::Exact,
                        Reduction::NONE,
                        &mut ctx,
                    )
                    .map_err(|e| e.to_string());
                    runs.push(GridRun {
                        n,
                        ell,
                        t,
                        label: schedule.label().to_string(),
                        schedule: schedule.clone(),
                        outcome,
                        audit_messages: ctx.audit.messages,
                        audit_violations: ctx.audit.violations.len() as u64,
                    });
                }
            }
        }
    }
    runs
}

fn check_rmc_exactness(grid: &[GridRun]) -> CheckReport {
    let mut failures = Vec::new();
    for run in grid {
        match &run.outcome {
            Ok(out) => {
                let exact = out.per_node.len() == run.n
                    && out.per_node.iter().all(|&v| v == run.n as u64);
                if !exact {
                    failures.push(format!("{}: nodes reported {:?}", run.id(), out.per_node));
                }
            }
            Err(e) => failures.push(format!("{}: {e}", run.id())),
        }
    }
    CheckReport::from_failures(
        "size-discovery-exactness",
        failures,
        format!("{} grid runs, every node reported the exact size", grid.len()),
    )
}

fn check_rmc_round_bound(grid: &[GridRun]) -> CheckReport {
    let eps = grid_eps();
    let mut failures = Vec::new();
    let mut checked = 0usize;
    for run in grid {
        let Ok(out) = &run.outcome else { continue };
        let mut budget: u64 = 0;
        let mut derivable = true;
        for &k in &out.estimate_path {
            let epoch_budget = share_denominator(k, eps)
                .map_err(|e| e.to_string())
                .and_then(|(_, d)| {
                    ExpansionMode::Exact
                        .info(&run.schedule, run.t, d)
                        .map_err(|e| e.to_string())
                })
                .and_then(|info| {
                    derive_rmc_params(k, run.ell as u64, run.t, eps, &info)
                        .map_err(|e| e.to_string())
                })
                .map(|params| params.epoch_rounds());
            match epoch_budget {
                Ok(rounds) => budget += rounds,
                Err(e) => {
                    failures.push(format!("{}: k={k} underivable: {e}", run.id()));
                    derivable = false;
                    break;
                }
            }
        }
        if derivable {
            checked += 1;
            if out.rounds > budget {
                failures.push(format!(
                    "{}: {} rounds exceed the {} round budget",
                    run.id(),
                    out.rounds,
                    budget
                ));
            }
        }
    }
    CheckReport::from_failures(
        "size-discovery-round-bound",
        failures,
        format!("{checked} runs stayed within the per-path epoch budget"),
    )
}

struct MultRun {
    n: usize,
    delta: usize,
    t: u32,
    label: String,
    per_node: Result<Vec<u64>, String>,
    audit_messages: u64,
    audit_violations: u64,
}

impl MultRun {
    fn id(&self) -> String {
        format!("n={} delta={} T={} {}", self.n, self.delta, self.t, self.label)
    }
}

fn multiplicity_grid(scope: Scope) -> Vec<MultRun> {
    let n_max = match scope {
        Scope::Quick => 5,
        Scope::Full => 8,
    };
    let mut runs = Vec::new();
    for n in 2..=n_max {
        let deltas: Vec<usize> = match scope {
            Scope::Quick => vec![1, n],
            Scope::Full => (1..=n).collect(),
        };
        for t in [1u32, 2] {
            for schedule in suite(n, t, grid_seeds(scope)) {
                for &delta in &deltas {
                    let holders = mask_first(n, delta);
                    let mut ctx = RunCtx::new(GRID_CAP);
                    let per_node = run_multiplicity(
                        &schedule,
                        &holders,
                        1,
                        &ExpansionMode::Exact,
                        Reduction::NONE,
                        1,
                        &mut ctx,
                    )
                    .map(|out| out.per_node)
                    .map_err(|e| e.to_string());
                    runs.push(MultRun {
                        n,
                        delta,
                        t,
                        label: schedule.label().to_string(),
                        per_node,
                        audit_messages: ctx.audit.messages,
                        audit_violations: ctx.audit.violations.len() as u64,
                    });
                }
            }
        }
    }
    runs
}

fn check_multiplicity(runs: &[MultRun]) -> CheckReport {
    let mut failures = Vec::new();
    for run in runs {
        match &run.per_node {
            Ok(counts) => {
                let exact = counts.len() == run.n
                    && counts.iter().all(|&v| v == run.delta as u64);
                if !exact {
                    failures.push(format!("{}: nodes reported {:?}", run.id(), counts));
                }
            }
            Err(e) => failures.push(format!("{}: {e}", run.id())),
        }
    }
    CheckReport::from_failures(
        "multiplicity-exactness",
        failures,
        format!("{} runs, every node counted the holders exactly", runs.len()),
    )
}

struct A2aRun {
    n: usize,
    ell: usize,
    label: String,
    profile: &'static str,
    inputs: Vec<u64>,
    outcome: Result<A2aOutcome, String>,
    audit_messages: u64,
    audit_violations: u64,
}

impl A2aRun {
    fn id(&self) -> String {
        format!("n={} ell={} {} {}", self.n, self.ell, self.profile, self.label)
    }
}

/// Input profiles: all values distinct, all equal, and one value shared by
/// all but two nodes.
fn input_profiles(n: usize) -> Vec<(&'static str, Vec<u64>)> {
    let distinct: Vec<u64> = (0..n).map(|u| (n - 1 - u) as u64).collect();
    let equal = vec![1u64; n];
    let mixed: Vec<u64> = if n >= 3 {
        let mut v = vec![2u64; n - 2];
        v.push(1);
        v.push(0);
        v
    } else {
        vec![1, 0]
    };
    vec![("all-distinct", distinct), ("all-equal", equal), ("mixed", mixed)]
}

fn a2a_grid(scope: Scope) -> Vec<A2aRun> {
    let n_max = match scope {
        Scope::Quick => 3,
        Scope::Full => 5,
    };
    let eps = grid_eps();
    let mut runs = Vec::new();
    for n in 2..=n_max {
        let schedules = vec![
            Schedule::static_graph(ConstituentGraph::clique(n), 1, "static-clique")
                .expect("clique schedule"),
            Schedule::static_graph(ConstituentGraph::path(n), 1, "static-path")
                .expect("path schedule"),
            Schedule::matching_alternation(n).expect("alternation schedule"),
        ];
        for ell in [1usize, 2] {
            if ell >= n {
                continue;
            }
            for (profile, inputs) in input_profiles(n) {
                for schedule in &schedules {
                    let mask = mask_first(n, ell);
                    let mut ctx = RunCtx::new(GRID_CAP);
                    let outcome = run_a2a(
                        schedule,
                        &mask,
                        &inputs,
                        eps,
                        &ExpansionMode::Exact,
                        Reduction::NONE,
                        &mut ctx,
                    )
                    .map_err(|e| e.to_string());
                    runs.push(A2aRun {
                        n,
                        ell,
                        label: schedule.label().to_string(),
                        profile,
                        inputs: inputs.clone(),
                        outcome,
                        audit_messages: ctx.audit.messages,
                        audit_violations: ctx.audit.violations.len() as u64,
                    });
                }
            }
        }
    }
    runs
}

/// The histogram every node must output: each input as a width-bit string
/// mapped to its multiplicity.
fn histogram(inputs: &[u64], width: u32) -> BTreeMap<String, u64> {
    let mut map = BTreeMap::new();
    for &v in inputs {
        *map.entry(format!("{v:0w$b}", w = width as usize)).or_insert(0) += 1;
    }
    map
}

fn check_a2a(runs: &[A2aRun]) -> CheckReport {
    let mut failures = Vec::new();
    for run in runs {
        match &run.outcome {
            Ok(out) => {
                let expected = histogram(&run.inputs, ceil_log2(run.n.max(2) as u64));
                for (u, map) in out.per_node.iter().enumerate() {
                    if *map != expected {
                        failures.push(format!(
                            "{}: node {u} mapped {map:?}, expected {expected:?}",
                            run.id()
                        ));
                        break;
                    }
                    let total: u64 = map.values().sum();
                    if total != run.n as u64 {
                        failures.push(format!(
                            "{}: node {u} counts sum to {total}, expected {}",
                            run.id(),
                            run.n
                        ));
                        break;
                    }
                }
            }
            Err(e) => failures.push(format!("{}: {e}", run.id())),
        }
    }
    CheckReport::from_failures(
        "all-to-all-histograms",
        failures,
        format!("{} runs reproduced the exact input histogram everywhere", runs.len()),
    )
}

fn check_conservation(scope: Scope) -> CheckReport {
    let target: u64 = match scope {
        Scope::Quick => 1_000,
        Scope::Full => 10_000,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut failures = Vec::new();
    let mut rounds_done: u64 = 0;
    while rounds_done < target && failures.len() < 8 {
        let n = rng.gen_range(2..=8usize);
        let d = [2 * n as u64, 4 * n as u64, 2 * (n * n) as u64][rng.gen_range(0..3)];
        let c = [2u32, 3, 5, 8][rng.gen_range(0..4)];
        let params = FixedPointParams::new(d, c);
        let ceiling = params.scale() * BigUint::from(n as u64);
        let mut pots: Vec<Potential> = (0..n)
            .map(|_| Potential::from_numerator(BigUint::from(rng.gen::<u64>()) % &ceiling))
            .collect();
        for _ in 0..rng.gen_range(5..=20u32) {
            let mut edges = Vec::new();
            for u in 0..n as u32 {
                for v in (u + 1)..n as u32 {
                    if rng.gen_bool(0.5) {
                        edges.push((u, v));
                    }
                }
            }
            let g = ConstituentGraph::new(n, &edges).expect("random graph");
            let shares: Vec<Potential> =
                pots.iter().map(|p| truncate_share(p, params)).collect();
            let before: BigUint = pots.iter().map(|p| p.numerator().clone()).sum();
            let mut next = Vec::with_capacity(n);
            let mut round_ok = true;
            for u in 0..n {
                let received: Vec<Potential> = g
                    .neighbors(u)
                    .iter()
                    .map(|&v| shares[v as usize].clone())
                    .collect();
                match potential_update(&pots[u], &received, params) {
                    Ok(p) => next.push(p),
                    Err(e) => {
                        failures.push(format!("n={n} d={d} c={c}: node {u}: {e}"));
                        round_ok = false;
                        break;
                    }
                }
            }
            if !round_ok {
                break;
            }
            let after: BigUint = next.iter().map(|p| p.numerator().clone()).sum();
            if after != before {
                failures.push(format!("n={n} d={d} c={c}: mass {before} became {after}"));
                break;
            }
            pots = next;
            rounds_done += 1;
        }
    }
    CheckReport::from_failures(
        "conservation-nonnegativity",
        failures,
        format!("{rounds_done} randomized update rounds conserved the exact mass"),
    )
}

fn check_contraction(scope: Scope) -> CheckReport {
    let pairs = match scope {
        Scope::Quick => 20,
        Scope::Full => 100,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut failures = Vec::new();
    for i in 0..pairs {
        let n = rng.gen_range(2..=6usize);
        let t = rng.gen_range(1..=2u32);
        let seed: u64 = rng.gen();
        let schedule = match Schedule::random_connected(n, t, 1, seed) {
            Ok(s) => s,
            Err(e) => {
                failures.push(format!("pair {i}: schedule generation: {e}"));
                continue;
            }
        };
        let d = 2 * (n * n) as u64;
        let weights: Vec<u64> = (0..n).map(|_| rng.gen_range(1..=1000u64)).collect();
        let total: u64 = weights.iter().sum();
        let dist: Vec<BigRational> = weights.iter().map(|&w| rat_u(w, total)).collect();
        match window_contraction_trace(&dist, &schedule, d, t, 1) {
            Ok(steps) => {
                let step = &steps[0];
                if !step.holds() {
                    failures.push(format!(
                        "pair {i} (n={n} T={t}): {} after vs bound {}",
                        step.after_sq, step.bound_sq
                    ));
                }
            }
            Err(e) => failures.push(format!("pair {i}: {e}")),
        }
    }
    CheckReport::from_failures(
        "window-contraction",
        failures,
        format!("{pairs} random (window, distribution) pairs contracted as bounded"),
    )
}

/// All labeled graphs on `n` vertices whose edge set is connected.
fn connected_graphs(n: usize) -> Vec<ConstituentGraph> {
    let pairs: Vec<(u32, u32)> = (0..n as u32)
        .flat_map(|u| ((u + 1)..n as u32).map(move |v| (u, v)))
        .collect();
    let mut out = Vec::new();
    for mask in 0u64..(1 << pairs.len()) {
        let edges: Vec<(u32, u32)> = pairs
            .iter()
            .enumerate()
            .filter(|(i, _)| mask & (1 << i) != 0)
            .map(|(_, &e)| e)
            .collect();
        let g = ConstituentGraph::new(n, &edges).expect("enumerated graph");
        if g.is_connected() {
            out.push(g);
        }
    }
    out
}

fn check_conductance_bound(scope: Scope) -> CheckReport {
    let mut failures = Vec::new();
    let mut checked = 0usize;
    let mut check_graph = |g: &ConstituentGraph, origin: String| {
        let n = g.n();
        let d = 2 * (n * n) as u64;
        let verdict = share_matrix(g, d)
            .and_then(|p| p.conductance())
            .and_then(|phi| isoperimetric_number(g).map(|i| (phi, i)));
        match verdict {
            Ok((phi, i)) => {
                if phi < i / big(d) {
                    failures.push(format!("{origin}: conductance {phi} below bound"));
                }
            }
            Err(e) => failures.push(format!("{origin}: {e}")),
        }
    };
    for n in 2..=4usize {
        for (idx, g) in connected_graphs(n).iter().enumerate() {
            checked += 1;
            check_graph(g, format!("n={n} graph #{idx}"));
        }
    }
    let samples = match scope {
        Scope::Quick => 25,
        Scope::Full => 200,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for n in [5usize, 6] {
        let mut produced = 0;
        while produced < samples {
            let mut edges = Vec::new();
            for u in 0..n as u32 {
                for v in (u + 1)..n as u32 {
                    if rng.gen_bool(0.5) {
                        edges.push((u, v));
                    }
                }
            }
            let g = ConstituentGraph::new(n, &edges).expect("sampled graph");
            if !g.is_connected() {
                continue;
            }
            checked += 1;
            check_graph(&g, format!("n={n} sample #{produced}"));
            produced += 1;
        }
    }
    CheckReport::from_failures(
        "conductance-isoperimetric-bound",
        failures,
        format!("{checked} connected graphs satisfied the exact conductance bound"),
    )
}

fn rotated(s: &Schedule, offset: usize) -> Schedule {
    let period = s.period();
    let shifted: Vec<ConstituentGraph> = period
        .iter()
        .cycle()
        .skip(offset)
        .take(period.len())
        .cloned()
        .collect();
    Schedule::from_period(s.n(), s.t(), shifted, s.label()).expect("rotated period")
}

fn check_broadcast_bound(scope: Scope) -> CheckReport {
    let mut failures = Vec::new();
    let mut checked = 0usize;
    for n in 2..=grid_n_max(scope) {
        for t in [1u32, 2] {
            for schedule in suite(n, t, grid_seeds(scope)) {
                let bound = WindowOracle::new(&schedule, t)
                    .i_min()
                    .map_err(|e| e.to_string())
                    .and_then(|i_min| {
                        flood_round_bound(n as u64, &i_min, t).map_err(|e| e.to_string())
                    });
                let bound = match bound {
                    Ok(b) => b,
                    Err(e) => {
                        failures.push(format!("n={n} T={t} {}: {e}", schedule.label()));
                        continue;
                    }
                };
                for offset in 0..schedule.period_len() {
                    let view = rotated(&schedule, offset);
                    for src in 0..n {
                        checked += 1;
                        if temporal_broadcast_time(&view, 1u64 << src, bound).is_none() {
                            failures.push(format!(
                                "n={n} T={t} {} offset {offset} source {src}: \
                                 not covered within {bound} rounds",
                                schedule.label()
                            ));
                        }
                    }
                }
            }
        }
    }
    CheckReport::from_failures(
        "broadcast-round-bound",
        failures,
        format!("{checked} (schedule, offset, source) broadcasts met the certified bound"),
    )
}

fn check_alarm_properties(grid: &[GridRun]) -> CheckReport {
    let eps = grid_eps();
    let mut failures = Vec::new();
    let mut epochs_checked = 0usize;
    for run in grid {
        let Ok(out) = &run.outcome else { continue };
        let n = run.n as u64;
        for (i, epoch) in out.epochs.iter().enumerate() {
            epochs_checked += 1;
            if out.estimate_path.get(i) != Some(&epoch.k) {
                failures.push(format!(
                    "{}: epoch {i} ran k={} but the path says {:?}",
                    run.id(),
                    epoch.k,
                    out.estimate_path.get(i)
                ));
            }
            if epoch.k >= n {
                if epoch.phase1_alarm {
                    failures.push(format!(
                        "{}: k={} >= n yet the phase-1 alarm fired",
                        run.id(),
                        epoch.k
                    ));
                }
                if epoch.phase1_max_phi > epoch.params.tau {
                    failures.push(format!(
                        "{}: k={} >= n yet a node ended phase 1 at {} > tau {}",
                        run.id(),
                        epoch.k,
                        epoch.phase1_max_phi,
                        epoch.params.tau
                    ));
                }
            }
            if upow(epoch.k, eps.num + eps.den) < upow(n, eps.den)
                && epoch.params.p >= 2
                && epoch.all_low_after_phase2 != Some(true)
            {
                failures.push(format!(
                    "{}: k^(1+eps) < n yet not all nodes were low after phase 2 (k={})",
                    run.id(),
                    epoch.k
                ));
            }
            if epoch.k > n {
                for (s, rho) in epoch.rho.iter().enumerate() {
                    if *rho >= epoch.params.accept_lo {
                        failures.push(format!(
                            "{}: k={} > n yet supervisor {s} accumulated {} >= {}",
                            run.id(),
                            epoch.k,
                            rho,
                            epoch.params.accept_lo
                        ));
                    }
                }
            }
        }
    }
    CheckReport::from_failures(
        "alarm-properties",
        failures,
        format!("{epochs_checked} epochs satisfied every estimate-side alarm property"),
    )
}

fn check_congestion(grid: &[GridRun], mult: &[MultRun], a2a: &[A2aRun]) -> CheckReport {
    let mut failures = Vec::new();
    let mut messages: u64 = 0;
    for run in grid {
        messages += run.audit_messages;
        if run.audit_violations > 0 {
            failures.push(format!("{}: {} oversized messages", run.id(), run.audit_violations));
        }
    }
    for run in mult {
        messages += run.audit_messages;
        if run.audit_violations > 0 {
            failures.push(format!("{}: {} oversized messages", run.id(), run.audit_violations));
        }
    }
    for run in a2a {
        messages += run.audit_messages;
        if run.audit_violations > 0 {
            failures.push(format!("{}: {} oversized messages", run.id(), run.audit_violations));
        }
    }
    CheckReport::from_failures(
        "congestion-audit",
        failures,
        format!("{messages} messages audited, none exceeded the width bound"),
    )
}

/// Shared in-memory trace sink, cloneable so the bytes stay reachable
/// after the tracer is consumed by the run context.
#[derive(Clone, Default)]
struct SharedBuf(Arc<Mutex<Vec<u8>>>);

impl SharedBuf {
    fn contents(&self) -> Vec<u8> {
        self.0.lock().expect("no panics hold this lock").clone()
    }
}

impl Write for SharedBuf {
    fn write(&mut self, buf: &[u8]) -> std::io::Result<usize> {
        self.0.lock().expect("no panics hold this lock").extend_from_slice(buf);
        Ok(buf.len())
    }

    fn flush(&mut self) -> std::io::Result<()> {
        Ok(())
    }
}

fn apply_perm<T: Clone>(values: &[T], perm: &[u32]) -> Vec<T> {
    let mut out = values.to_vec();
    for (u, v) in values.iter().enumerate() {
        out[perm[u] as usize] = v.clone();
    }
    out
}

fn check_determinism_anonymity() -> CheckReport {
    let eps = grid_eps();
    let mut failures = Vec::new();

    let path3 = Schedule::static_graph(ConstituentGraph::path(3), 1, "static-path")
        .expect("path schedule");
    let reduced = Reduction { p_div: 8, r_div: 64, c_div: 4 };
    let traced_mult = |_: ()| -> Result<(Vec<u64>, Vec<u8>), String> {
        let buf = SharedBuf::default();
        let mut ctx =
            RunCtx::new(GRID_CAP).with_tracer(Tracer::new(Box::new(buf.clone())));
        let out = run_multiplicity(
            &path3,
            &[true, false, false],
            1,
            &ExpansionMode::Exact,
            reduced,
            1,
            &mut ctx,
        )
        .map_err(|e| e.to_string())?;
        ctx.finish().map_err(|e| e.to_string())?;
        Ok((out.per_node, buf.contents()))
    };
    match (traced_mult(()), traced_mult(())) {
        (Ok((counts_a, bytes_a)), Ok((counts_b, bytes_b))) => {
            if bytes_a != bytes_b {
                failures.push("repeated traced runs produced different bytes".to_string());
            }
            if bytes_a.is_empty() {
                failures.push("traced run produced no trace".to_string());
            }
            if counts_a != counts_b {
                failures.push("repeated traced runs produced different counts".to_string());
            }
        }
        (Err(e), _) | (_, Err(e)) => failures.push(format!("traced run failed: {e}")),
    }

    let path4 = Schedule::static_graph(ConstituentGraph::path(4), 1, "static-path")
        .expect("path schedule");
    let mask4 = [true, true, false, false];
    let rmc_once = || -> Result<RmcOutcome, String> {
        let mut ctx = RunCtx::new(GRID_CAP);
        run_rmc(&path4, &mask4, eps, &ExpansionMode::Exact, Reduction::NONE, &mut ctx)
            .map_err(|e| e.to_string())
    };
    let rmc_a = rmc_once();
    let rmc_b = rmc_once();
    match (&rmc_a, &rmc_b) {
        (Ok(a), Ok(b)) => {
            let same = a.per_node == b.per_node
                && a.rounds == b.rounds
                && a.estimate_path == b.estimate_path
                && a.epochs.len() == b.epochs.len()
                && a.epochs.iter().zip(&b.epochs).all(|(x, y)| x.rho == y.rho);
            if !same {
                failures.push("repeated size-discovery runs disagreed".to_string());
            }
        }
        (Err(e), _) | (_, Err(e)) => failures.push(format!("size-discovery run failed: {e}")),
    }

    let perm4: [u32; 4] = [2, 0, 3, 1];
    let rmc_perm = || -> Result<RmcOutcome, String> {
        let mut ctx = RunCtx::new(GRID_CAP);
        let mask = apply_perm(&mask4, &perm4);
        run_rmc(
            &path4.permuted(&perm4),
            &mask,
            eps,
            &ExpansionMode::Exact,
            Reduction::NONE,
            &mut ctx,
        )
        .map_err(|e| e.to_string())
    };
    match (&rmc_a, rmc_perm()) {
        (Ok(a), Ok(b)) => {
            let same = apply_perm(&a.per_node, &perm4) == b.per_node
                && a.rounds == b.rounds
                && a.estimate_path == b.estimate_path;
            if !same {
                failures.push("relabeling changed size-discovery behavior".to_string());
            }
        }
        (_, Err(e)) => failures.push(format!("relabeled size-discovery run failed: {e}")),
        _ => {}
    }

    let clique3 = Schedule::static_graph(ConstituentGraph::clique(3), 1, "static-clique")
        .expect("clique schedule");
    let inputs3: [u64; 3] = [2, 1, 0];
    let mask3 = [true, false, false];
    let perm3: [u32; 3] = [1, 2, 0];
    let a2a_run = |sched: &Schedule, mask: &[bool], inputs: &[u64]| -> Result<A2aOutcome, String> {
        let mut ctx = RunCtx::new(GRID_CAP);
        run_a2a(sched, mask, inputs, eps, &ExpansionMode::Exact, Reduction::NONE, &mut ctx)
            .map_err(|e| e.to_string())
    };
    let plain = a2a_run(&clique3, &mask3, &inputs3);
    let permed = a2a_run(
        &clique3.permuted(&perm3),
        &apply_perm(&mask3, &perm3),
        &apply_perm(&inputs3, &perm3),
    );
    match (plain, permed) {
        (Ok(a), Ok(b)) => {
            let same = apply_perm(&a.per_node, &perm3) == b.per_node
                && a.rounds == b.rounds
                && a.discovery_order == b.discovery_order;
            if !same {
                failures.push("relabeling changed all-to-all behavior".to_string());
            }
        }
        (Err(e), _) | (_, Err(e)) => failures.push(format!("all-to-all run failed: {e}")),
    }

    CheckReport::from_failures(
        "determinism-anonymity",
        failures,
        "byte-identical reruns; node relabeling permuted every output exactly".to_string(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quick_scope_passes_every_check() {
        let reports = run_all(Scope::Quick);
        assert_eq!(reports.len(), 11);
        for report in &reports {
            assert!(report.pass, "{}: {}", report.name, report.details);
        }
    }

    #[test]
    fn suite_respects_the_window_filter() {
        let schedules = suite(4, 1, &[11]);
        assert!(schedules.iter().all(|s| s.label() != "matching-alternation"));
        let schedules = suite(4, 2, &[11]);
        assert!(schedules.iter().any(|s| s.label() == "matching-alternation"));
        let schedules = suite(2, 1, &[11]);
        assert!(schedules.iter().any(|s| s.label() == "matching-alternation"));
    }

    #[test]
    fn histogram_uses_fixed_width_keys() {
        let map = histogram(&[3, 1, 1, 0], 2);
        assert_eq!(map.get("11"), Some(&1));
        assert_eq!(map.get("01"), Some(&2));
        assert_eq!(map.get("00"), Some(&1));
    }

    #[test]
    fn permutation_helper_moves_values_to_new_labels() {
        let perm = [2u32, 0, 1];
        assert_eq!(apply_perm(&[10, 20, 30], &perm), vec![20, 30, 10]);
    }

    #[test]
    fn rotation_shifts_the_period() {
        let s = Schedule::matching_alternation(4).unwrap();
        let r = rotated(&s, 1);
        assert_eq!(r.graph_at(0), s.graph_at(1));
        assert_eq!(r.graph_at(1), s.graph_at(0));
    }
}
