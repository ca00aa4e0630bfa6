//! `orbit-sched`: dataset generation, planning and planner comparison.
//!
//! Exit codes: 0 on success, 2 for usage or configuration errors, 3 when a
//! planner emits a plan that fails validation or hits an internal error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use orbit_sched::chaining::gantt_csv;
use orbit_sched::model::{
    generate_instance_with, parse_ephemeris, parse_requests, serialize_plan, write_ephemeris, write_requests,
    GeneratorConfig, PriorityMix, ProblemInstance,
};
use orbit_sched::planner::{
    benchmark_csv, completion_table, run_planner, BenchmarkRow, ClusterMethod, PlannerKind, PlannerOptions,
};
use orbit_sched::render::{svg_gantt, svg_map};
use orbit_sched::rl::checkpoint::{curve_csv, load_checkpoint, save_checkpoint};
use orbit_sched::Error;
use serde::Deserialize;

const EPHEMERIS_FILE: &str = "ephemeris.json";
const REQUESTS_FILE: &str = "requests.json";

#[derive(Parser)]
#[command(name = "orbit-sched", version, about = "Mission planning for agile Earth-observation satellites")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic ephemeris and request set.
    Generate(GenerateArgs),
    /// Plan one instance with one planner.
    Plan(PlanArgs),
    /// Compare planners on one instance.
    Benchmark(BenchmarkArgs),
}

/// Instance source: a directory written by `generate`, or generator flags.
#[derive(Args, Clone, Default)]
struct InstanceArgs {
    /// Directory holding ephemeris.json and requests.json.
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long)]
    sats: Option<usize>,
    #[arg(long)]
    requests: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Planning horizon of generated instances, seconds.
    #[arg(long)]
    horizon_s: Option<i64>,
    /// Share of generated requests placed in bursts, 0 to 1.
    #[arg(long)]
    burst_fraction: Option<f64>,
    #[arg(long)]
    bursts_per_day: Option<f64>,
    /// Spread of request times around a burst centre, seconds.
    #[arg(long)]
    burst_sigma_s: Option<f64>,
    /// JSON file whose keys mirror the long flags (dashes as underscores).
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct GenerateArgs {
    #[command(flatten)]
    instance: InstanceArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Clone, Default)]
struct SolverArgs {
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    step_s: Option<i64>,
    /// Branch-and-bound limit per cluster, seconds.
    #[arg(long)]
    time_limit: Option<f64>,
    #[arg(long)]
    jobs: Option<usize>,
    /// PPO environment steps.
    #[arg(long)]
    ppo_steps: Option<usize>,
    /// AlphaZero training iterations.
    #[arg(long)]
    az_iterations: Option<usize>,
    /// AlphaZero search simulations per self-play move.
    #[arg(long)]
    az_simulations: Option<usize>,
    /// Search simulations per move when deploying AlphaZero.
    #[arg(long)]
    deploy_simulations: Option<usize>,
}

#[derive(Args)]
struct PlanArgs {
    #[command(flatten)]
    instance: InstanceArgs,
    #[command(flatten)]
    solver: SolverArgs,
    #[arg(long)]
    planner: Option<String>,
    #[arg(long)]
    cluster: Option<String>,
    /// Solve clusters exhaustively (ilp only, at most 8 requests each).
    #[arg(long)]
    oracle: bool,
    /// Plan JSON output.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    svg_map: Option<PathBuf>,
    #[arg(long)]
    svg_gantt: Option<PathBuf>,
    /// Gantt rows as CSV.
    #[arg(long)]
    gantt_csv: Option<PathBuf>,
    /// Policy to deploy instead of training one (ppo, alphazero).
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    /// Where to store a freshly trained policy.
    #[arg(long)]
    save_checkpoint: Option<PathBuf>,
    /// Learning curve CSV of a freshly trained policy.
    #[arg(long)]
    curve: Option<PathBuf>,
}

#[derive(Args)]
struct BenchmarkArgs {
    #[command(flatten)]
    instance: InstanceArgs,
    #[command(flatten)]
    solver: SolverArgs,
    /// Comma-separated planner names.
    #[arg(long)]
    planners: Option<String>,
    #[arg(long)]
    csv: Option<PathBuf>,
}

/// Config file contents; every key is optional and flags win.
#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct FileConfig {
    data: Option<PathBuf>,
    sats: Option<usize>,
    requests: Option<usize>,
    seed: Option<u64>,
    horizon_s: Option<i64>,
    burst_fraction: Option<f64>,
    bursts_per_day: Option<f64>,
    burst_sigma_s: Option<f64>,
    out: Option<PathBuf>,
    planner: Option<String>,
    planners: Option<Vec<String>>,
    cluster: Option<String>,
    k: Option<usize>,
    step_s: Option<i64>,
    time_limit: Option<f64>,
    jobs: Option<usize>,
    ppo_steps: Option<usize>,
    az_iterations: Option<usize>,
    az_simulations: Option<usize>,
    deploy_simulations: Option<usize>,
    svg_map: Option<PathBuf>,
    svg_gantt: Option<PathBuf>,
    csv: Option<PathBuf>,
}

enum Failure {
    Usage(String),
    Internal(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Internal(_) | Error::Divergence(_) => Failure::Internal(e.to_string()),
            _ => Failure::Usage(e.to_string()),
        }
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("ORBIT_SCHED_LOG", "error")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let result = match cli.command {
        Command::Generate(a) => cmd_generate(a),
        Command::Plan(a) => cmd_plan(a),
        Command::Benchmark(a) => cmd_benchmark(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Internal(m)) => {
            eprintln!("internal error: {m}");
            ExitCode::from(3)
        }
    }
}

fn load_config(path: Option<&Path>) -> CliResult<FileConfig> {
    let Some(path) = path else {
        return Ok(FileConfig::default());
    };
    let text = std::fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn instance_from(args: &InstanceArgs, config: &FileConfig) -> CliResult<ProblemInstance> {
    if let Some(dir) = args.data.as_ref().or(config.data.as_ref()) {
        let satellites = parse_ephemeris(dir.join(EPHEMERIS_FILE))?;
        let requests = parse_requests(dir.join(REQUESTS_FILE))?;
        return Ok(ProblemInstance::new(satellites, requests)?);
    }
    let sats = args.sats.or(config.sats).unwrap_or(2);
    let requests = args.requests.or(config.requests).unwrap_or(200);
    let seed = args.seed.or(config.seed).unwrap_or(42);
    let mut generator = GeneratorConfig::default();
    if let Some(h) = args.horizon_s.or(config.horizon_s) {
        generator.horizon_s = h;
    }
    if let Some(f) = args.burst_fraction.or(config.burst_fraction) {
        generator.burst_fraction = f;
    }
    if let Some(b) = args.bursts_per_day.or(config.bursts_per_day) {
        generator.bursts_per_day = b;
    }
    if let Some(s) = args.burst_sigma_s.or(config.burst_sigma_s) {
        generator.burst_sigma_s = s;
    }
    log::info!("generating {sats} satellites, {requests} requests, seed {seed}");
    Ok(generate_instance_with(&generator, sats, requests, &PriorityMix::default(), seed)?)
}

fn cmd_generate(args: GenerateArgs) -> CliResult<()> {
    let config = load_config(args.instance.config.as_deref())?;
    let out = args
        .out
        .or(config.out.clone())
        .ok_or_else(|| Failure::Usage("generate needs --out".into()))?;
    let instance = instance_from(&InstanceArgs { data: None, ..args.instance }, &config)?;
    std::fs::create_dir_all(&out).map_err(|e| Failure::Usage(format!("{}: {e}", out.display())))?;
    write_ephemeris(out.join(EPHEMERIS_FILE), &instance.satellites)?;
    write_requests(out.join(REQUESTS_FILE), &instance.requests)?;
    println!(
        "wrote {} satellites and {} requests to {}",
        instance.satellites.len(),
        instance.requests.len(),
        out.display()
    );
    Ok(())
}

fn options_for(kind: PlannerKind, cluster: Option<&str>, solver: &SolverArgs, seed: u64, config: &FileConfig) -> CliResult<PlannerOptions> {
    let cluster = match cluster {
        Some(c) => c.parse::<ClusterMethod>()?,
        None => kind.default_cluster(),
    };
    let mut options = PlannerOptions::new(kind, cluster);
    options.seed = seed;
    options.k = solver.k.or(config.k);
    if let Some(s) = solver.step_s.or(config.step_s) {
        options.step_s = s;
    }
    if let Some(t) = solver.time_limit.or(config.time_limit) {
        options.time_limit_s = t;
    }
    if let Some(j) = solver.jobs.or(config.jobs) {
        options.jobs = j;
    }
    if let Some(n) = solver.ppo_steps.or(config.ppo_steps) {
        options.ppo.total_steps = n;
    }
    if let Some(n) = solver.az_iterations.or(config.az_iterations) {
        options.alphazero.iterations = n;
    }
    if let Some(n) = solver.az_simulations.or(config.az_simulations) {
        options.alphazero.simulations = n;
    }
    if let Some(n) = solver.deploy_simulations.or(config.deploy_simulations) {
        options.deploy_mcts.simulations = n;
    }
    Ok(options)
}

fn write_text(path: &Path, text: &str) -> CliResult<()> {
    std::fs::write(path, text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn cmd_plan(args: PlanArgs) -> CliResult<()> {
    let config = load_config(args.instance.config.as_deref())?;
    let instance = instance_from(&args.instance, &config)?;
    let planner = args.planner.as_deref().or(config.planner.as_deref()).unwrap_or("greedy");
    let kind: PlannerKind = planner.parse()?;
    let seed = args.instance.seed.or(config.seed).unwrap_or(42);
    let mut options = options_for(kind, args.cluster.as_deref().or(config.cluster.as_deref()), &args.solver, seed, &config)?;
    if args.oracle {
        if kind != PlannerKind::Ilp {
            return Err(Failure::Usage("--oracle applies to the ilp planner".into()));
        }
        options.use_oracle = true;
    }
    if let Some(path) = &args.checkpoint {
        options.policy = Some(load_checkpoint(path)?);
    }
    let outcome = run_planner(&instance, &options)?;
    print!("{}", completion_table(&outcome.plan));
    println!(
        "planner {} cluster {} acquisitions {} wall {:.3}s",
        kind.name(),
        options.cluster.name(),
        outcome.plan.len(),
        outcome.wall_time_s
    );
    if let Some((net, curve)) = &outcome.trained {
        if let Some(path) = &args.save_checkpoint {
            save_checkpoint(net, path)?;
        }
        if let Some(path) = &args.curve {
            write_text(path, &curve_csv(curve))?;
        }
    }
    if let Some(path) = args.out.as_ref().or(config.out.as_ref()) {
        write_text(path, &serialize_plan(&outcome.plan))?;
    }
    if let Some(path) = args.svg_map.as_ref().or(config.svg_map.as_ref()) {
        write_text(path, &svg_map(&instance, &outcome.plan))?;
    }
    if let Some(path) = args.svg_gantt.as_ref().or(config.svg_gantt.as_ref()) {
        write_text(path, &svg_gantt(&instance, &outcome.plan))?;
    }
    if let Some(path) = &args.gantt_csv {
        write_text(path, &gantt_csv(&outcome.plan))?;
    }
    if !outcome.report.ok {
        for v in &outcome.report.violations {
            eprintln!("violation {} on {}: {}", v.rule_id, v.request_id, v.message);
        }
        return Err(Failure::Internal(format!(
            "{} planner produced {} violations",
            kind.name(),
            outcome.report.violations.len()
        )));
    }
    Ok(())
}

fn cmd_benchmark(args: BenchmarkArgs) -> CliResult<()> {
    let config = load_config(args.instance.config.as_deref())?;
    let names: Vec<String> = match (&args.planners, &config.planners) {
        (Some(list), _) => list.split(',').map(str::trim).filter(|s| !s.is_empty()).map(String::from).collect(),
        (None, Some(list)) => list.clone(),
        (None, None) => vec!["greedy".into(), "ilp".into()],
    };
    if names.is_empty() {
        return Err(Failure::Usage("benchmark needs at least one planner".into()));
    }
    let instance = instance_from(&args.instance, &config)?;
    let seed = args.instance.seed.or(config.seed).unwrap_or(42);
    let mut rows = Vec::new();
    for name in &names {
        let kind: PlannerKind = name.parse()?;
        let options = options_for(kind, None, &args.solver, seed, &config)?;
        let outcome = run_planner(&instance, &options)?;
        rows.push(BenchmarkRow::from_outcome(&options, &outcome));
    }
    let csv = benchmark_csv(&rows);
    print!("{csv}");
    if let Some(path) = args.csv.as_ref().or(config.csv.as_ref()) {
        write_text(path, &csv)?;
    }
    if rows.iter().any(|r| !r.valid) {
        return Err(Failure::Internal("a planner produced an invalid plan".into()));
    }
    Ok(())
}
