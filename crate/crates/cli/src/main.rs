//! Batch front end: builds graphs, runs scheduler traces, exhaustive
//! verification, and network simulations, sweeps seeds and sizes, and emits
//! machine-readable JSON/CSV results.
//!
//! Exit codes: 0 when the run's verdict passes, 1 when it fails (e.g. a
//! verification counterexample, a budget-exhausted trace, an exclusion
//! violation), 2 for usage or input errors.
//!
//! Option precedence: explicit flags, then the `--config` JSON file, then
//! built-in defaults. Relative output paths land in `$R1W1_OUTPUT_DIR` when
//! that variable is set.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::json;

use r1w1_core::algorithms::{AlgorithmSpec, InitSpec, WitnessPolicy};
use r1w1_core::engine::{self, daemon::Daemon, daemon::DaemonPolicy, state::ProcState};
use r1w1_core::topology::{self, Graph, GraphDescriptor};
use r1w1_core::transformer::{check_exclusion, CycleRecord, FaultPlan, Simulator, TrParams};
use r1w1_core::verifier;
use r1w1_core::{Configuration, MoveRecord};

const OUTPUT_DIR_ENV: &str = "R1W1_OUTPUT_DIR";

#[derive(Parser)]
#[command(
    name = "r1w1",
    version,
    about = "Self-stabilizing algorithm workbench: traces, verification, \
             network simulation, fault experiments, and seed sweeps"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one serial scheduler trace and print a summary
    Run(RunArgs),
    /// Exhaustively verify closure and convergence on small graphs
    Verify(VerifyArgs),
    /// Run one seeded network simulation and print metrics
    Transform(TransformArgs),
    /// Run a fault-injection experiment around a stabilized simulation
    Fault(FaultArgs),
    /// Sweep sizes and seeds, emitting one CSV row per simulation
    Sweep(SweepArgs),
}

/// Optional defaults loaded from a `--config` JSON file. Explicit flags win.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    alg: Option<String>,
    graph: Option<String>,
    init: Option<String>,
    daemon: Option<String>,
    witness: Option<String>,
    seed: Option<u64>,
    capacity_factor: Option<u64>,
    size_bound: Option<u64>,
    start_phase: Option<u8>,
    max_cycles: Option<usize>,
    max_moves: Option<usize>,
    cap: Option<u128>,
    fault: Option<String>,
}

impl FileConfig {
    fn load(path: Option<&Path>) -> Result<Self> {
        match path {
            None => Ok(FileConfig::default()),
            Some(p) => {
                let text = fs::read_to_string(p)
                    .with_context(|| format!("reading config file {}", p.display()))?;
                serde_json::from_str(&text)
                    .with_context(|| format!("parsing config file {}", p.display()))
            }
        }
    }
}

#[derive(Args)]
struct RunArgs {
    /// Algorithm selector: mmat11, mkdom11:k=_, mkdep11:k=_, broken-fixture
    #[arg(long)]
    alg: Option<String>,
    /// Graph descriptor (path:N, cycle:N, star:N, complete:N, tree:N:seed=_,
    /// gnp:N:P[:seed=_][:connected]) or @file.json
    #[arg(long)]
    graph: Option<String>,
    /// Initial configuration: all-bottom, all-ones-correct-counters,
    /// adversarial, random:seed=_, or @file.json
    #[arg(long)]
    init: Option<String>,
    /// Scheduler: random:seed=_, roundrobin, greedy, scripted:ID,ID,...
    #[arg(long)]
    daemon: Option<String>,
    /// Witness tie-break: lowest or highest
    #[arg(long)]
    witness: Option<String>,
    /// Move budget (default 10n+100)
    #[arg(long)]
    max_moves: Option<usize>,
    /// Clamp an out-of-domain initial configuration instead of rejecting it
    #[arg(long)]
    sanitize: bool,
    /// Write the move trace as JSON lines to this file
    #[arg(long)]
    trace_out: Option<PathBuf>,
    /// Write the summary JSON here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
    /// JSON file supplying defaults for omitted flags
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    /// Algorithm selector
    #[arg(long)]
    alg: Option<String>,
    /// Graph descriptor or @file.json (default path:3)
    #[arg(long, conflicts_with = "graphs")]
    graph: Option<String>,
    /// Named graph batch; currently `all-connected:n<=4`
    #[arg(long)]
    graphs: Option<String>,
    /// Refuse state spaces larger than this many configurations
    #[arg(long)]
    cap: Option<u128>,
    /// Write the report JSON here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
    /// JSON file supplying defaults for omitted flags
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct TransformArgs {
    /// Algorithm selector
    #[arg(long)]
    alg: Option<String>,
    /// Graph descriptor or @file.json
    #[arg(long)]
    graph: Option<String>,
    /// Initial configuration preset or @file.json
    #[arg(long)]
    init: Option<String>,
    /// Vote-capacity multiplier K >= 2; the vote range is K * size bound
    #[arg(long = "K", visible_alias = "capacity-factor")]
    capacity_factor: Option<u64>,
    /// Network-size bound fed to the vote range (default: exact n)
    #[arg(long)]
    size_bound: Option<u64>,
    /// Simulation seed
    #[arg(long)]
    seed: Option<u64>,
    /// Phase (1..=5) the first round executes
    #[arg(long)]
    start_phase: Option<u8>,
    /// Cycle budget before giving up
    #[arg(long)]
    max_cycles: Option<usize>,
    /// Witness tie-break: lowest or highest
    #[arg(long)]
    witness: Option<String>,
    /// Message-loss plan: none, drop-all:F..T, drop:P:F..T:seed=N
    #[arg(long)]
    fault: Option<String>,
    /// Write executed moves as JSON lines to this file
    #[arg(long)]
    trace_out: Option<PathBuf>,
    /// Write the metrics JSON here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
    /// JSON file supplying defaults for omitted flags
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct FaultArgs {
    #[command(flatten)]
    transform: TransformArgs,
    /// Fault plan: drop_all:rounds=A..B, drop:p=P:rounds=A..B:seed=N
    /// (anchors may be `post+K`, counted from stabilization), or
    /// corrupt:count=C:seed=N
    #[arg(long)]
    plan: String,
}

#[derive(Args)]
struct SweepArgs {
    /// Algorithm selector
    #[arg(long)]
    alg: Option<String>,
    /// Graph family: path, cycle, star, complete, tree, gnp:P[:connected]
    #[arg(long)]
    family: Option<String>,
    /// Inclusive size range, e.g. 5..40
    #[arg(long)]
    n: String,
    /// Seeds 0..N per size
    #[arg(long)]
    seeds: u64,
    /// Initial configuration preset (default random:seed=<row seed>)
    #[arg(long)]
    init: Option<String>,
    /// Vote-capacity multiplier K >= 2
    #[arg(long = "K", visible_alias = "capacity-factor")]
    capacity_factor: Option<u64>,
    /// Cycle budget per run
    #[arg(long)]
    max_cycles: Option<usize>,
    /// Write the CSV here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
    /// JSON file supplying defaults for omitted flags
    #[arg(long)]
    config: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Verify(args) => cmd_verify(args),
        Command::Transform(args) => cmd_transform(args),
        Command::Fault(args) => cmd_fault(args),
        Command::Sweep(args) => cmd_sweep(args),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}

// ---------------------------------------------------------------------------
// Shared plumbing

/// Resolves a relative output path under $R1W1_OUTPUT_DIR when set.
fn resolve_out(path: &Path) -> PathBuf {
    match std::env::var_os(OUTPUT_DIR_ENV) {
        Some(dir) if path.is_relative() => PathBuf::from(dir).join(path),
        _ => path.to_path_buf(),
    }
}

fn write_output(path: &Path, contents: &str) -> Result<()> {
    let full = resolve_out(path);
    if let Some(parent) = full.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)
                .with_context(|| format!("creating output directory {}", parent.display()))?;
        }
    }
    fs::write(&full, contents).with_context(|| format!("writing {}", full.display()))
}

/// Emits a document to `--out` or stdout.
fn emit(out: Option<&Path>, contents: &str) -> Result<()> {
    match out {
        Some(path) => write_output(path, contents),
        None => {
            print!("{contents}");
            Ok(())
        }
    }
}

fn parse_alg(flag: Option<String>, config: &FileConfig) -> Result<AlgorithmSpec> {
    let selector = flag
        .or_else(|| config.alg.clone())
        .ok_or_else(|| anyhow!("no algorithm given; pass --alg or set `alg` in --config"))?;
    AlgorithmSpec::from_str(&selector).map_err(Into::into)
}

fn load_graph(flag: Option<String>, config: &FileConfig, default: Option<&str>) -> Result<Graph> {
    let source = flag
        .or_else(|| config.graph.clone())
        .or_else(|| default.map(str::to_string))
        .ok_or_else(|| anyhow!("no graph given; pass --graph or set `graph` in --config"))?;
    if let Some(path) = source.strip_prefix('@') {
        let text =
            fs::read_to_string(path).with_context(|| format!("reading graph file {path}"))?;
        return Graph::from_json(&text).map_err(Into::into);
    }
    GraphDescriptor::from_str(&source)?.generate().map_err(Into::into)
}

fn load_init(
    flag: Option<String>,
    config: &FileConfig,
    alg: &AlgorithmSpec,
    g: &Graph,
    sanitize: bool,
) -> Result<Configuration> {
    let source = flag.or_else(|| config.init.clone()).unwrap_or_else(|| "all-bottom".into());
    if let Some(path) = source.strip_prefix('@') {
        let text = fs::read_to_string(path)
            .with_context(|| format!("reading initial configuration file {path}"))?;
        let states: Vec<ProcState> = serde_json::from_str(&text)
            .with_context(|| format!("parsing initial configuration file {path}"))?;
        let cfg = Configuration::new(states);
        if sanitize {
            return alg.sanitize(g, &cfg).map_err(Into::into);
        }
        alg.validate(g, &cfg)?;
        return Ok(cfg);
    }
    let spec = InitSpec::from_str(&source)?;
    alg.initial_config(g, &spec).map_err(Into::into)
}

fn parse_witness(flag: Option<String>, config: &FileConfig) -> Result<WitnessPolicy> {
    match flag.or_else(|| config.witness.clone()) {
        None => Ok(WitnessPolicy::LowestId),
        Some(s) => WitnessPolicy::from_str(&s).map_err(Into::into),
    }
}

fn transform_params(args: &TransformArgs, config: &FileConfig) -> Result<TrParams> {
    let defaults = TrParams::default();
    let mut params = TrParams {
        capacity_factor: args
            .capacity_factor
            .or(config.capacity_factor)
            .unwrap_or(defaults.capacity_factor),
        size_bound: args.size_bound.or(config.size_bound).map(|b| b as usize),
        seed: args.seed.or(config.seed).unwrap_or(defaults.seed),
        start_phase: args.start_phase.or(config.start_phase).unwrap_or(defaults.start_phase),
        max_cycles: args.max_cycles.or(config.max_cycles).unwrap_or(defaults.max_cycles),
        witness: parse_witness(args.witness.clone(), config)?,
        fault: FaultPlan::None,
    };
    if let Some(descriptor) = args.fault.clone().or_else(|| config.fault.clone()) {
        params.fault = FaultPlan::from_str(&descriptor)?;
    }
    Ok(params)
}

/// Flattens per-cycle move records into one globally numbered JSONL trace.
fn transformer_trace_jsonl(records: &[CycleRecord]) -> String {
    let mut out = String::new();
    let mut step = 0usize;
    for record in records {
        for mv in &record.moves {
            let mut renumbered: MoveRecord = mv.clone();
            renumbered.step = step;
            step += 1;
            out.push_str(&serde_json::to_string(&renumbered).expect("move serialization"));
            out.push('\n');
        }
    }
    out
}

fn count_exclusion_violations(g: &Graph, records: &[CycleRecord]) -> usize {
    records.iter().filter(|r| check_exclusion(g, &r.executors).is_err()).count()
}

// ---------------------------------------------------------------------------
// run

fn cmd_run(args: RunArgs) -> Result<u8> {
    let config = FileConfig::load(args.config.as_deref())?;
    let alg = parse_alg(args.alg.clone(), &config)?;
    let g = load_graph(args.graph.clone(), &config, None)?;
    let init = load_init(args.init.clone(), &config, &alg, &g, args.sanitize)?;
    let daemon_desc = args
        .daemon
        .clone()
        .or_else(|| config.daemon.clone())
        .unwrap_or_else(|| "random:seed=0".into());
    let mut daemon = Daemon::new(DaemonPolicy::from_str(&daemon_desc)?);
    let witness = parse_witness(args.witness.clone(), &config)?;
    let budget = args.max_moves.or(config.max_moves);

    let trace = engine::run(&g, &alg, &init, &mut daemon, witness, budget)?;
    let silent = engine::is_silent(&g, &alg, &trace.final_config);
    let legitimate = alg.is_legitimate(&g, &trace.final_config);
    let status = if trace.budget_exhausted {
        "budget exhausted"
    } else if legitimate {
        "converged-legitimate"
    } else {
        "converged-illegitimate"
    };

    let mut per_rule: BTreeMap<String, usize> = BTreeMap::new();
    for mv in &trace.moves {
        *per_rule.entry(format!("rule {} ({})", mv.rule, alg.rule_label(mv.rule))).or_default() +=
            1;
    }
    // Potential timeline for the matching algorithms: (paired, mispointed)
    // after each prefix of the trace.
    let potentials: Option<Vec<(usize, usize)>> = match alg {
        AlgorithmSpec::MMat | AlgorithmSpec::BrokenMMat => Some(
            trace
                .replay()
                .iter()
                .map(|cfg| r1w1_core::algorithms::mmat_potentials(&g, cfg))
                .collect(),
        ),
        _ => None,
    };

    let summary = json!({
        "algorithm": alg.to_string(),
        "n": g.n(),
        "daemon": daemon_desc,
        "moves": trace.len(),
        "per_rule": per_rule,
        "budget_exhausted": trace.budget_exhausted,
        "silent": silent,
        "legitimate": legitimate,
        "status": status,
        "potentials": potentials,
        "final": trace.final_config,
    });
    let mut doc = serde_json::to_string_pretty(&summary)?;
    doc.push('\n');
    emit(args.out.as_deref(), &doc)?;

    if let Some(path) = &args.trace_out {
        write_output(path, &trace.to_jsonl())?;
    }
    Ok(u8::from(status != "converged-legitimate"))
}

// ---------------------------------------------------------------------------
// verify

fn graph_batch(selector: &str) -> Result<Vec<(String, Graph)>> {
    match selector {
        "all-connected:n<=4" => Ok(topology::small_connected_corpus()
            .into_iter()
            .map(|(name, g)| (name.to_string(), g))
            .collect()),
        _ => bail!("unknown graph batch {selector:?}; expected all-connected:n<=4"),
    }
}

fn cmd_verify(args: VerifyArgs) -> Result<u8> {
    let config = FileConfig::load(args.config.as_deref())?;
    let alg = parse_alg(args.alg.clone(), &config)?;
    let cap = args.cap.or(config.cap);

    let targets: Vec<(String, Graph)> = match &args.graphs {
        Some(selector) => graph_batch(selector)?,
        None => {
            let g = load_graph(args.graph.clone(), &config, Some("path:3"))?;
            vec![(format!("n={}", g.n()), g)]
        }
    };

    let mut reports = Vec::new();
    let mut all_pass = true;
    for (name, g) in &targets {
        let report = verifier::verify(g, &alg, cap)?;
        all_pass &= report.holds();
        reports.push(json!({
            "graph": name,
            "n": g.n(),
            "verdict": if report.holds() { "pass" } else { "fail" },
            "report": report,
        }));
    }

    let doc = json!({
        "algorithm": alg.to_string(),
        "graphs": reports,
        "verdict": if all_pass { "pass" } else { "fail" },
    });
    let mut text = serde_json::to_string_pretty(&doc)?;
    text.push('\n');
    emit(args.out.as_deref(), &text)?;
    Ok(u8::from(!all_pass))
}

// ---------------------------------------------------------------------------
// transform

fn cmd_transform(args: TransformArgs) -> Result<u8> {
    let config = FileConfig::load(args.config.as_deref())?;
    let alg = parse_alg(args.alg.clone(), &config)?;
    let g = load_graph(args.graph.clone(), &config, None)?;
    let init = load_init(args.init.clone(), &config, &alg, &g, false)?;
    let params = transform_params(&args, &config)?;

    let mut sim = Simulator::new(&g, alg, &init, params)?;
    let (metrics, records) = sim.run_to_silence();
    let final_config = sim.projected_config();
    let legitimate = alg.is_legitimate(&g, &final_config);
    let exclusion_violations = count_exclusion_violations(&g, &records);
    let pass = metrics.converged && legitimate && exclusion_violations == 0;

    let doc = json!({
        "algorithm": alg.to_string(),
        "n": g.n(),
        "metrics": metrics,
        "legitimate": legitimate,
        "exclusion_violations": exclusion_violations,
        "final": final_config,
        "verdict": if pass { "pass" } else { "fail" },
    });
    let mut text = serde_json::to_string_pretty(&doc)?;
    text.push('\n');
    emit(args.out.as_deref(), &text)?;

    if let Some(path) = &args.trace_out {
        write_output(path, &transformer_trace_jsonl(&records))?;
    }
    Ok(u8::from(!pass))
}

// ---------------------------------------------------------------------------
// fault

/// A window endpoint: an absolute round, or rounds past stabilization.
#[derive(Debug, Clone, Copy)]
enum Anchor {
    Abs(usize),
    Post(usize),
}

impl Anchor {
    fn resolve(self, post: usize) -> usize {
        match self {
            Anchor::Abs(r) => r,
            Anchor::Post(delta) => post + delta,
        }
    }

    fn is_post(self) -> bool {
        matches!(self, Anchor::Post(_))
    }
}

impl FromStr for Anchor {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        if let Some(rest) = s.strip_prefix("post+") {
            return Ok(Anchor::Post(rest.parse().context("rounds past `post` must be an integer")?));
        }
        if s == "post" {
            return Ok(Anchor::Post(0));
        }
        Ok(Anchor::Abs(s.parse().context("round must be an integer or post+K")?))
    }
}

#[derive(Debug, Clone)]
enum PlanSpec {
    /// Drop messages in a round window; `p: None` means drop everything.
    Drop { p: Option<f64>, from: Anchor, to: Anchor, seed: u64 },
    /// Garble `count` nodes' records and caches after stabilization.
    Corrupt { count: usize, seed: u64 },
}

fn parse_plan(text: &str) -> Result<PlanSpec> {
    // Core descriptors ("none" aside) parse directly as absolute windows.
    if let Ok(plan) = FaultPlan::from_str(text) {
        return match plan {
            FaultPlan::None => bail!("plan `none` is not an experiment; use the transform command"),
            FaultPlan::DropAll { from, to } => {
                Ok(PlanSpec::Drop { p: None, from: Anchor::Abs(from), to: Anchor::Abs(to), seed: 0 })
            }
            FaultPlan::DropRandom { p, from, to, seed } => Ok(PlanSpec::Drop {
                p: Some(p),
                from: Anchor::Abs(from),
                to: Anchor::Abs(to),
                seed,
            }),
        };
    }

    let mut parts = text.split(':');
    let head = parts.next().unwrap_or_default();
    let mut window: Option<(Anchor, Anchor)> = None;
    let mut p: Option<f64> = None;
    let mut seed = 0u64;
    let mut count: Option<usize> = None;
    for part in parts {
        if let Some(rest) = part.strip_prefix("rounds=") {
            let (a, b) = rest
                .split_once("..")
                .ok_or_else(|| anyhow!("rounds must look like A..B in plan {text:?}"))?;
            window = Some((a.parse()?, b.parse()?));
        } else if let Some(rest) = part.strip_prefix("p=") {
            p = Some(rest.parse().context("p must be a probability")?);
        } else if let Some(rest) = part.strip_prefix("seed=") {
            seed = rest.parse().context("seed must be an integer")?;
        } else if let Some(rest) = part.strip_prefix("count=") {
            count = Some(rest.parse().context("count must be an integer")?);
        } else {
            bail!("unrecognized field {part:?} in plan {text:?}");
        }
    }
    match head {
        "drop_all" | "drop-all" => {
            let (from, to) =
                window.ok_or_else(|| anyhow!("plan {text:?} needs rounds=A..B"))?;
            Ok(PlanSpec::Drop { p: None, from, to, seed })
        }
        "drop" => {
            let (from, to) =
                window.ok_or_else(|| anyhow!("plan {text:?} needs rounds=A..B"))?;
            let p = p.ok_or_else(|| anyhow!("plan {text:?} needs p=<probability>"))?;
            Ok(PlanSpec::Drop { p: Some(p), from, to, seed })
        }
        "corrupt" => {
            let count = count.ok_or_else(|| anyhow!("plan {text:?} needs count=<nodes>"))?;
            Ok(PlanSpec::Corrupt { count, seed })
        }
        _ => bail!("unknown plan {text:?}; expected drop_all:..., drop:..., or corrupt:..."),
    }
}

fn cmd_fault(args: FaultArgs) -> Result<u8> {
    let plan = parse_plan(&args.plan)?;
    let targs = args.transform;
    let config = FileConfig::load(targs.config.as_deref())?;
    let alg = parse_alg(targs.alg.clone(), &config)?;
    let g = load_graph(targs.graph.clone(), &config, None)?;
    let init = load_init(targs.init.clone(), &config, &alg, &g, false)?;
    let params = transform_params(&targs, &config)?;

    let (doc, pass) = match plan {
        PlanSpec::Drop { p, from, to, seed } if from.is_post() || to.is_post() => {
            // Stabilize first, then open the loss window and watch the
            // projected configuration round by round.
            let mut sim = Simulator::new(&g, alg, &init, params)?;
            let (pre, pre_records) = sim.run_to_silence();
            let stabilized = pre.converged && alg.is_legitimate(&g, &sim.projected_config());
            let post = sim.rounds_elapsed();
            let (from, to) = (from.resolve(post), to.resolve(post));
            sim.set_fault(match p {
                None => FaultPlan::DropAll { from, to },
                Some(p) => FaultPlan::DropRandom { p, from, to, seed },
            });
            let mut window_legitimate = true;
            while sim.rounds_elapsed() < to {
                sim.step_one_round();
                window_legitimate &= alg.is_legitimate(&g, &sim.projected_config());
            }
            sim.set_fault(FaultPlan::None);
            let (after, after_records) = sim.run_to_silence();
            let settled = after.converged && alg.is_legitimate(&g, &sim.projected_config());
            let violations = count_exclusion_violations(&g, &pre_records)
                + count_exclusion_violations(&g, &after_records);
            let pass = stabilized && window_legitimate && settled && violations == 0;
            (
                json!({
                    "algorithm": alg.to_string(),
                    "n": g.n(),
                    "plan": args.plan,
                    "pre": pre,
                    "window": {
                        "rounds": [from, to],
                        "legitimate_every_round": window_legitimate,
                    },
                    "post": after,
                    "exclusion_violations": violations,
                    "verdict": if pass { "pass" } else { "fail" },
                }),
                pass,
            )
        }
        PlanSpec::Drop { p, from, to, seed } => {
            // Absolute window: the plan is live from the start of the run.
            let (from, to) = (from.resolve(0), to.resolve(0));
            let mut params = params;
            params.fault = match p {
                None => FaultPlan::DropAll { from, to },
                Some(p) => FaultPlan::DropRandom { p, from, to, seed },
            };
            let mut sim = Simulator::new(&g, alg, &init, params)?;
            let (metrics, records) = sim.run_to_silence();
            let legitimate = alg.is_legitimate(&g, &sim.projected_config());
            let violations = count_exclusion_violations(&g, &records);
            let pass = metrics.converged && legitimate && violations == 0;
            (
                json!({
                    "algorithm": alg.to_string(),
                    "n": g.n(),
                    "plan": args.plan,
                    "metrics": metrics,
                    "legitimate": legitimate,
                    "exclusion_violations": violations,
                    "verdict": if pass { "pass" } else { "fail" },
                }),
                pass,
            )
        }
        PlanSpec::Corrupt { count, seed } => {
            let mut sim = Simulator::new(&g, alg, &init, params)?;
            let (pre, pre_records) = sim.run_to_silence();
            let stabilized = pre.converged && alg.is_legitimate(&g, &sim.projected_config());
            let hit = sim.corrupt(seed, count);
            let (after, after_records) = sim.run_to_silence();
            let legitimate = alg.is_legitimate(&g, &sim.projected_config());
            let bound = alg.move_bound(g.n());
            let within_bound = after.moves <= bound;
            let violations = count_exclusion_violations(&g, &pre_records)
                + count_exclusion_violations(&g, &after_records);
            let pass =
                stabilized && after.converged && legitimate && within_bound && violations == 0;
            (
                json!({
                    "algorithm": alg.to_string(),
                    "n": g.n(),
                    "plan": args.plan,
                    "pre": pre,
                    "corrupted": hit,
                    "post": after,
                    "recovery_moves": after.moves,
                    "move_bound": bound,
                    "within_bound": within_bound,
                    "exclusion_violations": violations,
                    "verdict": if pass { "pass" } else { "fail" },
                }),
                pass,
            )
        }
    };

    let mut text = serde_json::to_string_pretty(&doc)?;
    text.push('\n');
    emit(targs.out.as_deref(), &text)?;
    Ok(u8::from(!pass))
}

// ---------------------------------------------------------------------------
// sweep

#[derive(Debug, Clone, Copy)]
enum Family {
    Path,
    Cycle,
    Star,
    Complete,
    Tree,
    Gnp { p: f64, connected: bool },
}

impl Family {
    fn generate(self, n: usize, seed: u64) -> Result<Graph> {
        let g = match self {
            Family::Path => topology::path(n)?,
            Family::Cycle => topology::cycle(n)?,
            Family::Star => topology::star(n)?,
            Family::Complete => topology::complete(n)?,
            Family::Tree => topology::random_tree(n, seed)?,
            Family::Gnp { p, connected } => {
                if connected {
                    topology::gnp_connected(n, p, seed)?
                } else {
                    topology::gnp(n, p, seed)?
                }
            }
        };
        Ok(g)
    }
}

impl FromStr for Family {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "path" => Ok(Family::Path),
            "cycle" => Ok(Family::Cycle),
            "star" => Ok(Family::Star),
            "complete" => Ok(Family::Complete),
            "tree" => Ok(Family::Tree),
            _ => {
                let rest = s
                    .strip_prefix("gnp:")
                    .ok_or_else(|| anyhow!("unknown family {s:?}"))?;
                let (p_text, connected) = match rest.strip_suffix(":connected") {
                    Some(head) => (head, true),
                    None => (rest, false),
                };
                let p: f64 = p_text.parse().context("edge probability must be a number")?;
                Ok(Family::Gnp { p, connected })
            }
        }
    }
}

/// Parses an inclusive size range written `A..B` or `A..=B`.
fn parse_size_range(text: &str) -> Result<(usize, usize)> {
    let (a, b) = text
        .split_once("..")
        .ok_or_else(|| anyhow!("size range must look like 5..40"))?;
    let b = b.strip_prefix('=').unwrap_or(b);
    let lo: usize = a.parse().context("range start must be an integer")?;
    let hi: usize = b.parse().context("range end must be an integer")?;
    if lo == 0 || hi < lo {
        bail!("size range {text:?} is empty or starts at zero");
    }
    Ok((lo, hi))
}

#[derive(Serialize)]
struct SweepRow {
    n: usize,
    seed: u64,
    cycles: usize,
    rounds: usize,
    bcasts: usize,
    moves: usize,
    converged: bool,
}

fn cmd_sweep(args: SweepArgs) -> Result<u8> {
    let config = FileConfig::load(args.config.as_deref())?;
    let alg = parse_alg(args.alg.clone(), &config)?;
    let family = Family::from_str(
        &args.family.clone().or_else(|| config.graph.clone()).unwrap_or_else(|| "gnp:0.25:connected".into()),
    )?;
    let (lo, hi) = parse_size_range(&args.n)?;
    let fixed_init = match args.init.clone().or_else(|| config.init.clone()) {
        Some(s) => Some(InitSpec::from_str(&s)?),
        None => None,
    };
    let defaults = TrParams::default();
    let capacity_factor = args
        .capacity_factor
        .or(config.capacity_factor)
        .unwrap_or(defaults.capacity_factor);
    let max_cycles = args.max_cycles.or(config.max_cycles).unwrap_or(defaults.max_cycles);

    let mut rows: Vec<SweepRow> = Vec::new();
    for n in lo..=hi {
        for seed in 0..args.seeds {
            let g = family.generate(n, seed)?;
            let init_spec = fixed_init.clone().unwrap_or(InitSpec::Random { seed });
            let init = alg.initial_config(&g, &init_spec)?;
            let params = TrParams { capacity_factor, seed, max_cycles, ..TrParams::default() };
            let mut sim = Simulator::new(&g, alg, &init, params)?;
            let (metrics, _) = sim.run_to_silence();
            rows.push(SweepRow {
                n,
                seed,
                cycles: metrics.cycles,
                rounds: metrics.rounds,
                bcasts: metrics.bcasts,
                moves: metrics.moves,
                converged: metrics.converged,
            });
        }
    }

    let mut csv = String::from("n,seed,cycles,rounds,bcasts,moves,converged\n");
    let mut all_converged = true;
    for row in &rows {
        all_converged &= row.converged;
        csv.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            row.n, row.seed, row.cycles, row.rounds, row.bcasts, row.moves, row.converged
        ));
    }
    emit(args.out.as_deref(), &csv)?;
    Ok(u8::from(!all_converged))
}
