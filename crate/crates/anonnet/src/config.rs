//! Experiment configuration and dispatch: one JSON document selects a
//! protocol, system sizes, schedule, and mode; `run_experiment` executes
//! it; `run_sweep` fans a grid of such runs over a bounded worker pool.
//!
//! Every model precondition is re-validated at load, so an infeasible
//! configuration fails with the violated inequality named instead of deep
//! inside a run.

use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use num::bigint::BigInt;
use num::rational::BigRational;
use num::Zero;
use serde::{Deserialize, Serialize};
use serde_json::json;
use thiserror::Error;

use crate::params::{flood_round_bound, share_denominator, Epsilon};
use crate::protocol::a2a::{or_flood, run_a2a};
use crate::protocol::multiplicity::run_multiplicity;
use crate::protocol::rmc::run_rmc;
use crate::protocol::{ceil_log2, ExpansionMode, Reduction};
use crate::schedule::{Schedule, ScheduleFamily, WindowOracle};
use crate::sim::{RunCtx, RunResult, SimError, Tracer};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config parse error: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("config read error: {0}")]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Invalid(String),
}

/// Which state machine (or schedule analysis) a run drives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProtocolKind {
    Rmc,
    Multiplicity,
    All2all,
    Broadcast,
    Analyze,
}

impl ProtocolKind {
    pub fn name(&self) -> &'static str {
        match self {
            ProtocolKind::Rmc => "rmc",
            ProtocolKind::Multiplicity => "multiplicity",
            ProtocolKind::All2all => "all2all",
            ProtocolKind::Broadcast => "broadcast",
            ProtocolKind::Analyze => "analyze",
        }
    }
}

impl std::fmt::Display for ProtocolKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for ProtocolKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "rmc" => Ok(ProtocolKind::Rmc),
            "multiplicity" => Ok(ProtocolKind::Multiplicity),
            "all2all" => Ok(ProtocolKind::All2all),
            "broadcast" => Ok(ProtocolKind::Broadcast),
            "analyze" => Ok(ProtocolKind::Analyze),
            other => Err(format!(
                "unknown protocol `{other}`; expected rmc | multiplicity | all2all | broadcast | analyze"
            )),
        }
    }
}

/// Full-fidelity parameters, or divisor-scaled ones for exploratory runs.
/// Reduced runs carry no correctness claim and are flagged in every
/// artifact they produce.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    #[default]
    Full,
    Reduced,
}

/// Divisors applied to (p, b, c) in reduced mode.
pub const REDUCED: Reduction = Reduction { p_div: 8, r_div: 64, c_div: 4 };

impl Mode {
    pub fn name(&self) -> &'static str {
        match self {
            Mode::Full => "full",
            Mode::Reduced => "reduced",
        }
    }

    pub fn reduction(&self) -> Reduction {
        match self {
            Mode::Full => Reduction::NONE,
            Mode::Reduced => REDUCED,
        }
    }
}

impl std::str::FromStr for Mode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "full" => Ok(Mode::Full),
            "reduced" => Ok(Mode::Reduced),
            other => Err(format!("unknown mode `{other}`; expected full | reduced")),
        }
    }
}

fn default_ell() -> usize {
    1
}

fn default_t() -> u32 {
    1
}

fn default_epsilon() -> Epsilon {
    Epsilon::integer(1)
}

/// Generous default: full-parameter desk-scale runs stay far below it.
pub const DEFAULT_ROUND_CAP: u64 = 1_000_000_000_000;

fn default_round_cap() -> u64 {
    DEFAULT_ROUND_CAP
}

/// One experiment, loadable from JSON. Unknown fields are rejected so a
/// typo cannot silently fall back to a default.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub protocol: ProtocolKind,
    pub n: usize,
    /// Supervisor count for rmc and all2all; width-audit ceiling otherwise.
    #[serde(default = "default_ell")]
    pub ell: usize,
    /// Connectivity window the schedule is trusted to honor.
    #[serde(default = "default_t", alias = "T")]
    pub t: u32,
    pub schedule: ScheduleFamily,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_epsilon")]
    pub epsilon: Epsilon,
    /// Trusted lower bound on every window union's isoperimetric number,
    /// as an exact rational string; when absent the exact oracle runs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub i_min_hint: Option<String>,
    #[serde(default = "default_round_cap")]
    pub round_cap: u64,
    #[serde(default)]
    pub mode: Mode,
    /// Multiplicity only: the first `delta` labels hold the token.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<usize>,
    /// All-to-all only: one input value per node, each below 2^ceil(log2 n).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inputs: Option<Vec<u64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

impl ExperimentConfig {
    /// A configuration with every optional field at its default.
    pub fn new(protocol: ProtocolKind, n: usize) -> Self {
        ExperimentConfig {
            protocol,
            n,
            ell: default_ell(),
            t: default_t(),
            schedule: ScheduleFamily::StaticClique,
            seed: 0,
            epsilon: default_epsilon(),
            i_min_hint: None,
            round_cap: default_round_cap(),
            mode: Mode::Full,
            delta: None,
            inputs: None,
            trace: None,
            out: None,
        }
    }

    pub fn from_json_str(text: &str) -> Result<Self, ConfigError> {
        let cfg: ExperimentConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self, ConfigError> {
        ExperimentConfig::from_json_str(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |msg: String| Err(ConfigError::Invalid(msg));
        if self.n < 2 {
            return invalid(format!("network size must satisfy n >= 2, got n = {}", self.n));
        }
        if self.n > 64 {
            return invalid(format!("network size must satisfy n <= 64, got n = {}", self.n));
        }
        if self.t < 1 {
            return invalid("connectivity window must satisfy T >= 1, got T = 0".into());
        }
        if self.round_cap < 1 {
            return invalid("round cap must satisfy cap >= 1, got 0".into());
        }
        match self.protocol {
            ProtocolKind::Rmc | ProtocolKind::All2all => {
                if self.ell == 0 || self.ell >= self.n {
                    return invalid(format!(
                        "supervisor count must satisfy 0 < ell < n, got ell = {}, n = {}",
                        self.ell, self.n
                    ));
                }
            }
            ProtocolKind::Multiplicity | ProtocolKind::Broadcast | ProtocolKind::Analyze => {}
        }
        if let Some(delta) = self.delta {
            if self.protocol != ProtocolKind::Multiplicity {
                return invalid("field `delta` applies only to multiplicity runs".into());
            }
            if delta > self.n {
                return invalid(format!(
                    "holder count must satisfy delta <= n, got delta = {delta}, n = {}",
                    self.n
                ));
            }
        }
        if let Some(inputs) = &self.inputs {
            if self.protocol != ProtocolKind::All2all {
                return invalid("field `inputs` applies only to all2all runs".into());
            }
            if inputs.len() != self.n {
                return invalid(format!(
                    "all2all needs one input per node: got {} inputs for n = {}",
                    inputs.len(),
                    self.n
                ));
            }
            let width = ceil_log2(self.n.max(2) as u64);
            for &v in inputs {
                if width < 64 && v >> width != 0 {
                    return invalid(format!(
                        "input {v} does not fit the identifier width ceil(log2 n) = {width}"
                    ));
                }
            }
        }
        if let Some(hint) = &self.i_min_hint {
            let parsed: BigRational = hint.parse().map_err(|e| {
                ConfigError::Invalid(format!("i_min_hint `{hint}` is not a rational: {e}"))
            })?;
            if parsed <= BigRational::zero() {
                return invalid(format!("i_min_hint must be positive, got {hint}"));
            }
        }
        Ok(())
    }

    /// The expansion knowledge a run is entitled to: the hint when one was
    /// given, otherwise the exact enumeration oracle.
    pub fn expansion_mode(&self) -> ExpansionMode {
        match &self.i_min_hint {
            Some(hint) => {
                let parsed: BigRational =
                    hint.parse().expect("validate() admits only rational hints");
                ExpansionMode::HintIsoperimetric(parsed)
            }
            None => ExpansionMode::Exact,
        }
    }

    pub fn build_schedule(&self) -> Result<Schedule, SimError> {
        Ok(self.schedule.build(self.n, self.t, self.seed)?)
    }
}

/// The first `ell` labels supervise. Labels are a harness convenience; no
/// protocol step reads them.
pub fn supervisor_mask(n: usize, ell: usize) -> Vec<bool> {
    (0..n).map(|u| u < ell).collect()
}

fn default_inputs(n: usize) -> Vec<u64> {
    (0..n).map(|u| (n - 1 - u) as u64).collect()
}

/// Executes one configured experiment and summarizes it.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunResult, SimError> {
    cfg.validate().map_err(|e| SimError::Protocol(e.to_string()))?;
    let schedule = cfg.build_schedule()?;
    let expansion = cfg.expansion_mode();
    let reduction = cfg.mode.reduction();
    let n = cfg.n;
    let mut ctx = RunCtx::new(cfg.round_cap);
    if let Some(path) = &cfg.trace {
        ctx = ctx.with_tracer(Tracer::to_file(path)?);
    }

    let mut estimate_path = Vec::new();
    let outputs = match cfg.protocol {
        ProtocolKind::Rmc => {
            let mask = supervisor_mask(n, cfg.ell);
            let out = run_rmc(&schedule, &mask, cfg.epsilon, &expansion, reduction, &mut ctx)?;
            estimate_path = out.estimate_path.clone();
            let epochs: Vec<serde_json::Value> = out
                .epochs
                .iter()
                .map(|e| {
                    json!({
                        "k": e.k,
                        "outcome": e.outcome.name(),
                        "rounds": e.rounds,
                        "phase1_alarm": e.phase1_alarm,
                        "phase1_max_phi": e.phase1_max_phi.to_string(),
                        "all_low_after_phase2": e.all_low_after_phase2,
                        "rho": e.rho.iter().map(|r| r.to_string()).collect::<Vec<_>>(),
                        "accept_lo": e.params.accept_lo.to_string(),
                        "accept_hi": e.params.accept_hi.to_string(),
                        "tau": e.params.tau.to_string(),
                    })
                })
                .collect();
            json!({ "estimates": out.per_node, "epochs": epochs })
        }
        ProtocolKind::Multiplicity => {
            let delta = cfg.delta.unwrap_or(1);
            let holders: Vec<bool> = (0..n).map(|u| u < delta).collect();
            let out = run_multiplicity(
                &schedule,
                &holders,
                cfg.ell.max(1) as u64,
                &expansion,
                reduction,
                1,
                &mut ctx,
            )?;
            json!({ "counts": out.per_node, "delta": delta })
        }
        ProtocolKind::All2all => {
            let inputs = cfg.inputs.clone().unwrap_or_else(|| default_inputs(n));
            let mask = supervisor_mask(n, cfg.ell);
            let out = run_a2a(
                &schedule,
                &mask,
                &inputs,
                cfg.epsilon,
                &expansion,
                reduction,
                &mut ctx,
            )?;
            estimate_path = out.rmc.estimate_path.clone();
            json!({
                "histograms": out.per_node,
                "discovery_order": out.discovery_order,
                "agreed_n": out.n,
                "width": out.width,
                "epochs": out.epochs,
            })
        }
        ProtocolKind::Broadcast => {
            let t = schedule.t();
            let i_min = expansion.i_min_for(&schedule, t, n as u64)?;
            let budget = flood_round_bound(n as u64, &i_min, t)?;
            let mut init = vec![false; n];
            init[0] = true;
            let flags = or_flood(&schedule, &init, budget, &mut ctx)?;
            let covered = flags.iter().all(|f| *f);
            let oracle_rounds =
                crate::oracle::temporal_broadcast_time(&schedule, 1, budget.max(n as u64));
            json!({
                "covered": covered,
                "flags": flags,
                "flood_rounds": budget,
                "oracle_rounds": oracle_rounds,
            })
        }
        ProtocolKind::Analyze => analyze_schedule(&schedule, cfg.epsilon)?,
    };

    ctx.finish()?;
    Ok(RunResult {
        protocol: cfg.protocol.name().to_string(),
        n,
        outputs,
        rounds: ctx.round,
        max_message_bits: ctx.audit.max_bits,
        estimate_path,
        schedule: schedule.label().to_string(),
        seed: Some(cfg.seed),
        mode: cfg.mode.name().to_string(),
        congestion_violations: ctx.audit.violations.len() as u64,
    })
}

/// Per-window expansion table: for every period offset, the window union's
/// isoperimetric number, the window product's conductance at the share
/// denominator derived from (n, epsilon), and the bound i/d^T the
/// conductance must dominate.
pub fn analyze_schedule(schedule: &Schedule, eps: Epsilon) -> Result<serde_json::Value, SimError> {
    let n = schedule.n() as u64;
    let t = schedule.t();
    let (_, d) = share_denominator(n, eps)?;
    let d_pow_t = BigRational::from_integer(BigInt::from(d).pow(t));
    let oracle = WindowOracle::new(schedule, t);
    let mut rows = Vec::new();
    let mut i_min: Option<BigRational> = None;
    let mut phi_min: Option<BigRational> = None;
    for offset in 0..schedule.period_len() as u64 {
        let i = oracle.window_isoperimetric(offset)?;
        let phi = oracle.window_conductance(offset, d)?;
        let bound = &i / &d_pow_t;
        rows.push(json!({
            "offset": offset,
            "union_isoperimetric": i.to_string(),
            "product_conductance": phi.to_string(),
            "conductance_lower_bound": bound.to_string(),
            "holds": phi >= bound,
        }));
        if i_min.as_ref().map_or(true, |b| &i < b) {
            i_min = Some(i);
        }
        if phi_min.as_ref().map_or(true, |b| &phi < b) {
            phi_min = Some(phi);
        }
    }
    Ok(json!({
        "label": schedule.label(),
        "n": schedule.n(),
        "t": t,
        "d": d,
        "windows": rows,
        "i_min": i_min.expect("period is nonempty").to_string(),
        "phi_min": phi_min.expect("period is nonempty").to_string(),
    }))
}

/// Cross-product grid over a base experiment. Empty axes inherit the base
/// value. Cells with ell >= n are dropped up front: no protocol in the
/// model admits as many supervisors as nodes, so such cells carry no
/// information. Per-cell traces are disabled; cells run concurrently and
/// may not share a sink.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub base: ExperimentConfig,
    #[serde(default)]
    pub n: Vec<usize>,
    #[serde(default)]
    pub ell: Vec<usize>,
    #[serde(default, alias = "T")]
    pub t: Vec<u32>,
    #[serde(default)]
    pub schedules: Vec<ScheduleFamily>,
    #[serde(default)]
    pub seeds: Vec<u64>,
}

impl SweepConfig {
    pub fn from_json_str(text: &str) -> Result<Self, ConfigError> {
        let sweep: SweepConfig = serde_json::from_str(text)?;
        Ok(sweep)
    }

    pub fn from_path(path: &Path) -> Result<Self, ConfigError> {
        SweepConfig::from_json_str(&std::fs::read_to_string(path)?)
    }

    pub fn cells(&self) -> Vec<ExperimentConfig> {
        let ns = axis(&self.n, self.base.n);
        let ells = axis(&self.ell, self.base.ell);
        let ts = axis(&self.t, self.base.t);
        let schedules = if self.schedules.is_empty() {
            vec![self.base.schedule.clone()]
        } else {
            self.schedules.clone()
        };
        let seeds = axis(&self.seeds, self.base.seed);
        let mut cells = Vec::new();
        for &n in &ns {
            for &ell in &ells {
                if ell >= n {
                    continue;
                }
                for &t in &ts {
                    for family in &schedules {
                        for &seed in &seeds {
                            let mut cell = self.base.clone();
                            cell.n = n;
                            cell.ell = ell;
                            cell.t = t;
                            cell.schedule = family.clone();
                            cell.seed = seed;
                            cell.trace = None;
                            cell.out = None;
                            cells.push(cell);
                        }
                    }
                }
            }
        }
        cells
    }
}

fn axis<T: Copy>(values: &[T], base: T) -> Vec<T> {
    if values.is_empty() {
        vec![base]
    } else {
        values.to_vec()
    }
}

/// One grid cell's outcome: identification, pass/fail against ground
/// truth, and either run statistics or the recorded error.
#[derive(Debug, Clone, Serialize)]
pub struct SweepCell {
    pub index: usize,
    pub protocol: String,
    pub n: usize,
    pub ell: usize,
    pub t: u32,
    pub schedule: String,
    pub seed: u64,
    pub mode: String,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rounds: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_message_bits: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepReport {
    pub passed: usize,
    pub failed: usize,
    pub cells: Vec<SweepCell>,
}

impl SweepReport {
    pub fn all_passed(&self) -> bool {
        self.failed == 0
    }
}

/// Runs every cell on a pool of `workers` threads. A failing or erroring
/// cell is recorded and the sweep continues; the report is in cell order
/// regardless of completion order.
pub fn run_sweep(sweep: &SweepConfig, workers: usize) -> SweepReport {
    let cells = sweep.cells();
    let total = cells.len();
    let results: Vec<Mutex<Option<SweepCell>>> = (0..total).map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    let workers = workers.clamp(1, total.max(1));
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= total {
                    break;
                }
                let cell = run_cell(i, &cells[i]);
                *results[i].lock().expect("no panics hold this lock") = Some(cell);
            });
        }
    });
    let cells_out: Vec<SweepCell> = results
        .into_iter()
        .map(|m| m.into_inner().expect("lock free").expect("every index was claimed"))
        .collect();
    let passed = cells_out.iter().filter(|c| c.pass).count();
    SweepReport { passed, failed: total - passed, cells: cells_out }
}

fn run_cell(index: usize, cfg: &ExperimentConfig) -> SweepCell {
    let base = SweepCell {
        index,
        protocol: cfg.protocol.name().to_string(),
        n: cfg.n,
        ell: cfg.ell,
        t: cfg.t,
        schedule: cfg.schedule.name().to_string(),
        seed: cfg.seed,
        mode: cfg.mode.name().to_string(),
        pass: false,
        rounds: None,
        max_message_bits: None,
        error: None,
    };
    match run_experiment(cfg) {
        Ok(result) => SweepCell {
            pass: cell_passes(cfg, &result),
            rounds: Some(result.rounds),
            max_message_bits: Some(result.max_message_bits),
            ..base
        },
        Err(e) => SweepCell { error: Some(e.to_string()), ..base },
    }
}

/// Ground-truth check for a completed cell, by protocol: rmc must report
/// n everywhere, multiplicity must report delta everywhere, all2all must
/// reproduce the exact input histogram everywhere, broadcast must cover
/// the graph, analyze must find the conductance bound holding everywhere.
pub fn cell_passes(cfg: &ExperimentConfig, result: &RunResult) -> bool {
    match cfg.protocol {
        ProtocolKind::Rmc => result.outputs["estimates"].as_array().is_some_and(|v| {
            v.len() == cfg.n && v.iter().all(|x| x.as_u64() == Some(cfg.n as u64))
        }),
        ProtocolKind::Multiplicity => {
            let delta = cfg.delta.unwrap_or(1) as u64;
            result.outputs["counts"]
                .as_array()
                .is_some_and(|v| v.len() == cfg.n && v.iter().all(|x| x.as_u64() == Some(delta)))
        }
        ProtocolKind::All2all => {
            let inputs = cfg.inputs.clone().unwrap_or_else(|| default_inputs(cfg.n));
            let expected = expected_histogram(&inputs, ceil_log2(cfg.n.max(2) as u64));
            result.outputs["histograms"]
                .as_array()
                .is_some_and(|v| v.len() == cfg.n && v.iter().all(|h| *h == expected))
        }
        ProtocolKind::Broadcast => result.outputs["covered"].as_bool() == Some(true),
        ProtocolKind::Analyze => result.outputs["windows"]
            .as_array()
            .is_some_and(|rows| rows.iter().all(|r| r["holds"].as_bool() == Some(true))),
    }
}

/// The histogram all2all must reproduce: each input as a fixed-width bit
/// string, mapped to its multiplicity.
pub fn expected_histogram(inputs: &[u64], width: u32) -> serde_json::Value {
    let mut map = std::collections::BTreeMap::<String, u64>::new();
    for &v in inputs {
        *map.entry(format!("{v:0w$b}", w = width as usize)).or_insert(0) += 1;
    }
    serde_json::to_value(map).expect("string map serializes")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn clique_config(protocol: ProtocolKind, n: usize, ell: usize) -> ExperimentConfig {
        let mut cfg = ExperimentConfig::new(protocol, n);
        cfg.ell = ell;
        cfg
    }

    #[test]
    fn minimal_json_fills_defaults() {
        let cfg = ExperimentConfig::from_json_str(
            r#"{"protocol": "rmc", "n": 3, "schedule": {"family": "static-clique"}}"#,
        )
        .unwrap();
        assert_eq!(cfg.protocol, ProtocolKind::Rmc);
        assert_eq!(cfg.ell, 1);
        assert_eq!(cfg.t, 1);
        assert_eq!(cfg.seed, 0);
        assert_eq!(cfg.epsilon, Epsilon::integer(1));
        assert_eq!(cfg.mode, Mode::Full);
        assert_eq!(cfg.round_cap, 1_000_000_000_000);
    }

    #[test]
    fn epsilon_and_window_parse_from_json() {
        let cfg = ExperimentConfig::from_json_str(
            r#"{"protocol": "rmc", "n": 4, "ell": 2, "T": 2, "epsilon": "1/2",
                "schedule": {"family": "matching-alternation"}}"#,
        )
        .unwrap();
        assert_eq!(cfg.epsilon, Epsilon::new(1, 2).unwrap());
        assert_eq!(cfg.t, 2);
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let err = ExperimentConfig::from_json_str(
            r#"{"protocol": "rmc", "n": 3, "schedule": {"family": "static-clique"},
                "rounds_cap": 5}"#,
        )
        .unwrap_err();
        assert!(matches!(err, ConfigError::Parse(_)));
    }

    #[test]
    fn validation_names_the_violated_inequality() {
        let mut cfg = clique_config(ProtocolKind::Rmc, 3, 3);
        let msg = cfg.validate().unwrap_err().to_string();
        assert!(msg.contains("0 < ell < n"), "{msg}");

        cfg = clique_config(ProtocolKind::Rmc, 1, 1);
        let msg = cfg.validate().unwrap_err().to_string();
        assert!(msg.contains("n >= 2"), "{msg}");

        cfg = clique_config(ProtocolKind::Multiplicity, 3, 1);
        cfg.delta = Some(4);
        let msg = cfg.validate().unwrap_err().to_string();
        assert!(msg.contains("delta <= n"), "{msg}");

        cfg = clique_config(ProtocolKind::All2all, 3, 1);
        cfg.inputs = Some(vec![0, 1, 5]);
        let msg = cfg.validate().unwrap_err().to_string();
        assert!(msg.contains("identifier width"), "{msg}");

        cfg = clique_config(ProtocolKind::Rmc, 3, 1);
        cfg.i_min_hint = Some("0".into());
        let msg = cfg.validate().unwrap_err().to_string();
        assert!(msg.contains("positive"), "{msg}");
    }

    #[test]
    fn misplaced_protocol_fields_are_rejected() {
        let mut cfg = clique_config(ProtocolKind::Rmc, 3, 1);
        cfg.delta = Some(1);
        assert!(cfg.validate().is_err());
        cfg = clique_config(ProtocolKind::Rmc, 3, 1);
        cfg.inputs = Some(vec![0, 1, 2]);
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn rmc_run_reports_exact_size() {
        let cfg = clique_config(ProtocolKind::Rmc, 3, 1);
        let result = run_experiment(&cfg).unwrap();
        assert_eq!(result.protocol, "rmc");
        assert_eq!(result.mode, "full");
        assert_eq!(result.outputs["estimates"], json!([3, 3, 3]));
        assert_eq!(result.estimate_path, vec![2, 4, 3]);
        assert_eq!(result.congestion_violations, 0);
        assert!(cell_passes(&cfg, &result));
    }

    #[test]
    fn multiplicity_run_counts_holders() {
        let mut cfg = clique_config(ProtocolKind::Multiplicity, 4, 1);
        cfg.schedule = ScheduleFamily::StaticPath;
        cfg.delta = Some(2);
        let result = run_experiment(&cfg).unwrap();
        assert_eq!(result.outputs["counts"], json!([2, 2, 2, 2]));
        assert!(cell_passes(&cfg, &result));
    }

    #[test]
    fn all2all_run_reproduces_the_input_histogram() {
        let mut cfg = clique_config(ProtocolKind::All2all, 2, 1);
        cfg.inputs = Some(vec![0, 1]);
        let result = run_experiment(&cfg).unwrap();
        let expected = json!({"0": 1, "1": 1});
        let per_node = result.outputs["histograms"].as_array().unwrap();
        assert_eq!(per_node.len(), 2);
        assert!(per_node.iter().all(|h| *h == expected));
        assert!(cell_passes(&cfg, &result));
    }

    #[test]
    fn broadcast_covers_within_the_certified_budget() {
        let mut cfg = clique_config(ProtocolKind::Broadcast, 4, 1);
        cfg.schedule = ScheduleFamily::StaticPath;
        let result = run_experiment(&cfg).unwrap();
        assert_eq!(result.outputs["covered"], json!(true));
        let budget = result.outputs["flood_rounds"].as_u64().unwrap();
        let oracle = result.outputs["oracle_rounds"].as_u64().unwrap();
        assert!(oracle <= budget, "oracle {oracle} > budget {budget}");
        assert!(cell_passes(&cfg, &result));
    }

    #[test]
    fn analyze_reports_per_window_expansion() {
        let mut cfg = clique_config(ProtocolKind::Analyze, 4, 1);
        cfg.schedule = ScheduleFamily::MatchingAlternation;
        cfg.t = 2;
        let result = run_experiment(&cfg).unwrap();
        let rows = result.outputs["windows"].as_array().unwrap();
        assert_eq!(rows.len(), 2);
        assert!(rows.iter().all(|r| r["holds"] == json!(true)));
        assert_eq!(result.rounds, 0);
        assert!(cell_passes(&cfg, &result));
    }

    #[test]
    fn reduced_mode_is_flagged_and_shrinks_the_run() {
        let full = clique_config(ProtocolKind::Multiplicity, 2, 1);
        let full_rounds = run_experiment(&full).unwrap().rounds;
        let mut reduced = full.clone();
        reduced.mode = Mode::Reduced;
        let result = run_experiment(&reduced).unwrap();
        assert_eq!(result.mode, "reduced");
        assert!(result.rounds < full_rounds, "{} !< {full_rounds}", result.rounds);
    }

    #[test]
    fn sweep_covers_the_grid_and_skips_infeasible_cells() {
        let sweep = SweepConfig {
            base: clique_config(ProtocolKind::Rmc, 2, 1),
            n: vec![2, 3],
            ell: vec![1, 2],
            t: vec![],
            schedules: vec![],
            seeds: vec![],
        };
        let cells = sweep.cells();
        assert_eq!(cells.len(), 3);
        let report = run_sweep(&sweep, 3);
        assert!(report.all_passed(), "{report:?}");
        assert_eq!(report.cells.len(), 3);
        assert!(report.cells.iter().enumerate().all(|(i, c)| c.index == i));
    }

    #[test]
    fn sweep_records_cell_errors_and_continues() {
        let mut base = clique_config(ProtocolKind::Multiplicity, 4, 1);
        base.delta = Some(3);
        let sweep =
            SweepConfig { base, n: vec![2, 4], ell: vec![], t: vec![], schedules: vec![], seeds: vec![] };
        let report = run_sweep(&sweep, 2);
        assert_eq!(report.cells.len(), 2);
        assert_eq!(report.passed, 1);
        assert_eq!(report.failed, 1);
        assert!(report.cells[0].error.as_deref().unwrap().contains("delta <= n"));
        assert!(report.cells[1].pass);
    }

    #[test]
    fn trace_file_lists_every_round() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.jsonl");
        let mut cfg = clique_config(ProtocolKind::Multiplicity, 2, 1);
        cfg.trace = Some(path.clone());
        let result = run_experiment(&cfg).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len() as u64, result.rounds * 2);
        for line in lines {
            let record: crate::sim::TraceRecord = serde_json::from_str(line).unwrap();
            assert!(record.node < 2);
        }
    }
}
