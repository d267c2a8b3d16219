//! Experiment runner: configure a system, schedule, and protocol, then
//! execute single runs, grid sweeps, schedule analyses, or the built-in
//! verification suite. Summaries are JSON on stdout or at `--out`; traces
//! are JSON Lines at `--trace`.

use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use anonnet::config::{
    analyze_schedule, run_experiment, run_sweep, ExperimentConfig, Mode, ProtocolKind,
    SweepConfig,
};
use anonnet::params::Epsilon;
use anonnet::schedule::{Schedule, ScheduleFamily};
use anonnet::verify::{run_all, Scope};

#[derive(Parser)]
#[command(
    name = "anonnet",
    about = "Protocols and a deterministic simulator for anonymous dynamic congested networks",
    version
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Execute one experiment and print its summary.
    Run(RunArgs),
    /// Execute a grid of experiments on a worker pool.
    Sweep(SweepArgs),
    /// Print the per-window expansion table of a schedule.
    Analyze(AnalyzeArgs),
    /// Run the exactness, bound, and determinism checks.
    Verify(VerifyArgs),
}

#[derive(Args)]
struct RunArgs {
    /// JSON experiment description; explicit flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_parser = parse_protocol)]
    protocol: Option<ProtocolKind>,
    /// Number of nodes.
    #[arg(long)]
    n: Option<usize>,
    /// Number of supervisors.
    #[arg(long)]
    ell: Option<usize>,
    /// Connectivity window the schedule is trusted to honor.
    #[arg(long)]
    t: Option<u32>,
    /// Schedule family: static-clique | static-path | matching-alternation
    /// | random-connected.
    #[arg(long)]
    schedule: Option<String>,
    /// Period length in windows for random-connected schedules.
    #[arg(long, default_value_t = 2)]
    windows: usize,
    #[arg(long)]
    seed: Option<u64>,
    /// Sharpness exponent, an exact positive rational such as 1 or 1/2.
    #[arg(long, value_parser = parse_epsilon)]
    epsilon: Option<Epsilon>,
    /// Trusted isoperimetric lower bound; skips the exact expansion oracle.
    #[arg(long)]
    i_min_hint: Option<String>,
    /// Abort the run after this many rounds.
    #[arg(long)]
    cap: Option<u64>,
    /// full | reduced; reduced shrinks phases, blocks, and scale for
    /// exploration and is flagged in every artifact.
    #[arg(long, value_parser = parse_mode)]
    mode: Option<Mode>,
    /// Multiplicity runs: how many nodes hold the token.
    #[arg(long)]
    delta: Option<usize>,
    /// All-to-all runs: comma-separated input values, one per node.
    #[arg(long, value_delimiter = ',')]
    inputs: Option<Vec<u64>>,
    /// Write a JSON-Lines trace, one record per node per round.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Write the summary here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    /// JSON sweep description: a base experiment plus value axes.
    #[arg(long)]
    config: PathBuf,
    /// Worker threads; defaults to the available parallelism.
    #[arg(long)]
    workers: Option<usize>,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Schedule file: header `n=<count> T=<window>`, then per round
    /// `t=<round>: u-v,u-v,...`.
    #[arg(long)]
    schedule_file: Option<PathBuf>,
    /// Schedule family to build instead of loading a file.
    #[arg(long)]
    schedule: Option<String>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, default_value_t = 1)]
    t: u32,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 2)]
    windows: usize,
    /// Sharpness exponent the share denominator is derived from.
    #[arg(long, value_parser = parse_epsilon, default_value = "1")]
    epsilon: Epsilon,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    /// quick | full.
    #[arg(long, default_value = "quick")]
    scope: String,
    /// Run a single check by its report name instead of the whole suite.
    #[arg(long)]
    check: Option<String>,
}

fn parse_protocol(s: &str) -> Result<ProtocolKind, String> {
    s.parse()
}

fn parse_mode(s: &str) -> Result<Mode, String> {
    s.parse()
}

fn parse_epsilon(s: &str) -> Result<Epsilon, String> {
    s.parse()
}

fn parse_family(name: &str, windows: usize) -> Result<ScheduleFamily> {
    match name {
        "static-clique" => Ok(ScheduleFamily::StaticClique),
        "static-path" => Ok(ScheduleFamily::StaticPath),
        "matching-alternation" => Ok(ScheduleFamily::MatchingAlternation),
        "random-connected" => Ok(ScheduleFamily::RandomConnected { windows }),
        other => bail!(
            "unknown schedule family `{other}`; expected static-clique | static-path \
             | matching-alternation | random-connected"
        ),
    }
}

fn emit(value: &serde_json::Value, out: Option<&PathBuf>) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    match out {
        Some(path) => std::fs::write(path, text + "\n")
            .with_context(|| format!("writing {}", path.display()))?,
        None => println!("{text}"),
    }
    Ok(())
}

fn run_config(args: &RunArgs) -> Result<ExperimentConfig> {
    let mut cfg = match &args.config {
        Some(path) => ExperimentConfig::from_path(path)
            .with_context(|| format!("loading {}", path.display()))?,
        None => {
            let protocol = args
                .protocol
                .context("--protocol is required when no --config file is given")?;
            let n = args.n.context("--n is required when no --config file is given")?;
            ExperimentConfig::new(protocol, n)
        }
    };
    if let Some(p) = args.protocol {
        cfg.protocol = p;
    }
    if let Some(n) = args.n {
        cfg.n = n;
    }
    if let Some(ell) = args.ell {
        cfg.ell = ell;
    }
    if let Some(t) = args.t {
        cfg.t = t;
    }
    if let Some(name) = &args.schedule {
        cfg.schedule = parse_family(name, args.windows)?;
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(eps) = args.epsilon {
        cfg.epsilon = eps;
    }
    if let Some(hint) = &args.i_min_hint {
        cfg.i_min_hint = Some(hint.clone());
    }
    if let Some(cap) = args.cap {
        cfg.round_cap = cap;
    }
    if let Some(mode) = args.mode {
        cfg.mode = mode;
    }
    if let Some(delta) = args.delta {
        cfg.delta = Some(delta);
    }
    if let Some(inputs) = &args.inputs {
        cfg.inputs = Some(inputs.clone());
    }
    if let Some(trace) = &args.trace {
        cfg.trace = Some(trace.clone());
    }
    if let Some(out) = &args.out {
        cfg.out = Some(out.clone());
    }
    cfg.validate()?;
    Ok(cfg)
}

fn cmd_run(args: RunArgs) -> Result<()> {
    let cfg = run_config(&args)?;
    let result = run_experiment(&cfg)?;
    let violations = result.congestion_violations;
    emit(&serde_json::to_value(&result)?, cfg.out.as_ref())?;
    if violations > 0 {
        bail!("run recorded {violations} congestion violation(s)");
    }
    Ok(())
}

fn cmd_sweep(args: SweepArgs) -> Result<()> {
    let sweep = SweepConfig::from_path(&args.config)
        .with_context(|| format!("loading {}", args.config.display()))?;
    let workers = args.workers.unwrap_or_else(|| {
        std::thread::available_parallelism().map(|p| p.get()).unwrap_or(4)
    });
    let report = run_sweep(&sweep, workers);
    emit(&serde_json::to_value(&report)?, args.out.as_ref())?;
    if report.failed > 0 {
        eprintln!(
            "warning: {} of {} cells did not pass",
            report.failed,
            report.cells.len()
        );
    }
    Ok(())
}

fn cmd_analyze(args: AnalyzeArgs) -> Result<()> {
    let schedule = match (&args.schedule_file, &args.schedule) {
        (Some(path), _) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading {}", path.display()))?;
            Schedule::parse(&text)?
        }
        (None, Some(name)) => {
            let n = args.n.context("--n is required when building a schedule family")?;
            parse_family(name, args.windows)?.build(n, args.t, args.seed)?
        }
        (None, None) => bail!("give either --schedule-file or --schedule"),
    };
    let table = analyze_schedule(&schedule, args.epsilon)?;
    emit(&table, args.out.as_ref())
}

fn cmd_verify(args: VerifyArgs) -> Result<()> {
    let scope = match args.scope.as_str() {
        "quick" => Scope::Quick,
        "full" => Scope::Full,
        other => bail!("unknown scope `{other}`; expected quick | full"),
    };
    let reports = match &args.check {
        Some(name) => match anonnet::verify::run_check(scope, name) {
            Some(report) => vec![report],
            None => bail!("unknown check `{name}`; names are printed by a full run"),
        },
        None => run_all(scope),
    };
    let mut failed = 0;
    for report in &reports {
        let verdict = if report.pass { "PASS" } else { "FAIL" };
        println!("[{verdict}] {}: {}", report.name, report.details);
        if !report.pass {
            failed += 1;
        }
    }
    if failed > 0 {
        bail!("{failed} of {} checks failed", reports.len());
    }
    Ok(())
}

fn main() -> Result<()> {
    match Cli::parse().cmd {
        Cmd::Run(args) => cmd_run(args),
        Cmd::Sweep(args) => cmd_sweep(args),
        Cmd::Analyze(args) => cmd_analyze(args),
        Cmd::Verify(args) => cmd_verify(args),
    }
}
