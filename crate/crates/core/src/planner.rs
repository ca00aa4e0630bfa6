//! One entry point for every planner: cluster, plan, chain, validate.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chaining::{link_clusters, trimmed_start};
use crate::clustering::{cluster_requests, split_large, Cluster};
use crate::error::{Error, Result};
use crate::geometry::Ephemeris;
use crate::greedy::greedy_schedule;
use crate::ilp::{
    brute_force_oracle, extract_acquisitions, model_for, solve_bb, Assignment, IlpModel, DEFAULT_STEP_S,
    ORACLE_MAX_REQUESTS,
};
use crate::model::{validate_plan, AcquisitionRequest, ChainedAcquisition, Plan, ProblemInstance, ValidationReport};
use crate::qubo::{anneal, to_qubo};
use crate::rl::alphazero::{train_alphazero, AlphaZeroConfig};
use crate::rl::env::Environment;
use crate::rl::mcts::MctsConfig;
use crate::rl::net::Net;
use crate::rl::ppo::{train_ppo, PpoConfig};
use crate::rl::{plan_with_policy, satellite_envs, CurvePoint, Deployment};

pub use crate::clustering::ClusterMethod;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PlannerKind {
    Greedy,
    Ilp,
    Qubo,
    Ppo,
    Alphazero,
}

impl PlannerKind {
    pub const ALL: [PlannerKind; 5] = [
        PlannerKind::Greedy,
        PlannerKind::Ilp,
        PlannerKind::Qubo,
        PlannerKind::Ppo,
        PlannerKind::Alphazero,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PlannerKind::Greedy => "greedy",
            PlannerKind::Ilp => "ilp",
            PlannerKind::Qubo => "qubo",
            PlannerKind::Ppo => "ppo",
            PlannerKind::Alphazero => "alphazero",
        }
    }

    /// Clusterer used when none is given: spatial clusters for greedy,
    /// overlapping-window bunches for the solvers. The learned planners
    /// see the whole timeline and ignore clustering.
    pub fn default_cluster(self) -> ClusterMethod {
        match self {
            PlannerKind::Greedy => ClusterMethod::Kmeans,
            PlannerKind::Ilp | PlannerKind::Qubo => ClusterMethod::DtoBunch,
            PlannerKind::Ppo | PlannerKind::Alphazero => ClusterMethod::None,
        }
    }
}

impl FromStr for PlannerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Argument(format!("unknown planner {s:?}")))
    }
}

#[derive(Debug, Clone)]
pub struct PlannerOptions {
    pub kind: PlannerKind,
    pub cluster: ClusterMethod,
    /// K-means cluster count; `None` means one cluster per 8 requests.
    pub k: Option<usize>,
    pub step_s: i64,
    /// Branch-and-bound limit per cluster, seconds; 0 for none.
    pub time_limit_s: f64,
    pub seed: u64,
    /// Worker threads; satellites are planned in parallel.
    pub jobs: usize,
    /// Largest cluster handed to the exact solver.
    pub ilp_max_cluster: usize,
    pub qubo_max_cluster: usize,
    pub qubo_step_s: i64,
    pub anneal_sweeps: usize,
    pub anneal_restarts: usize,
    /// Annealing temperatures, first and last sweep.
    pub anneal_t: (f64, f64),
    pub ppo: PpoConfig,
    pub alphazero: AlphaZeroConfig,
    /// Search used when deploying the AlphaZero policy.
    pub deploy_mcts: MctsConfig,
    /// Pretrained policy; the learned planners train one when absent.
    pub policy: Option<Net>,
    /// Solve clusters by exhaustive enumeration instead of branch and
    /// bound (at most 8 requests per cluster).
    pub use_oracle: bool,
}

impl PlannerOptions {
    pub fn new(kind: PlannerKind, cluster: ClusterMethod) -> Self {
        Self {
            kind,
            cluster,
            k: None,
            step_s: DEFAULT_STEP_S,
            time_limit_s: 10.0,
            seed: 0,
            jobs: 1,
            ilp_max_cluster: 8,
            qubo_max_cluster: 3,
            qubo_step_s: 20,
            anneal_sweeps: 20_000,
            anneal_restarts: 8,
            anneal_t: (10.0, 0.01),
            ppo: PpoConfig {
                total_steps: 4096,
                ..PpoConfig::default()
            },
            alphazero: AlphaZeroConfig {
                iterations: 3,
                episodes_per_iteration: 2,
                simulations: 16,
                ..AlphaZeroConfig::default()
            },
            deploy_mcts: MctsConfig {
                simulations: 32,
                ..MctsConfig::default()
            },
            policy: None,
            use_oracle: false,
        }
    }

    fn check(&self) -> Result<()> {
        if self.step_s < 1 || self.qubo_step_s < 1 {
            return Err(Error::Argument("time steps must be at least 1 s".into()));
        }
        if self.jobs == 0 || self.ilp_max_cluster == 0 || self.qubo_max_cluster == 0 {
            return Err(Error::Argument("jobs and cluster caps must be positive".into()));
        }
        if self.use_oracle && self.ilp_max_cluster > ORACLE_MAX_REQUESTS {
            return Err(Error::Argument(format!(
                "the exhaustive solver takes at most {ORACLE_MAX_REQUESTS} requests per cluster"
            )));
        }
        if self.k == Some(0) {
            return Err(Error::Argument("k must be positive".into()));
        }
        if !(self.time_limit_s >= 0.0) {
            return Err(Error::Argument(format!("time limit {} must be >= 0", self.time_limit_s)));
        }
        if self.anneal_sweeps == 0 || self.anneal_restarts == 0 || !(self.anneal_t.0 >= self.anneal_t.1 && self.anneal_t.1 > 0.0) {
            return Err(Error::Argument("annealing needs sweeps and restarts".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct PlanOutcome {
    pub plan: Plan,
    pub report: ValidationReport,
    pub clusters: usize,
    /// Solver calls stopped by the time limit.
    pub unproven_clusters: usize,
    /// Acquisitions removed while linking clusters.
    pub dropped: Vec<String>,
    /// Policy trained during this run, with its learning curve.
    pub trained: Option<(Net, Vec<CurvePoint>)>,
    pub wall_time_s: f64,
}

/// Runs the planner selected in `options` and validates its plan.
pub fn run_planner(instance: &ProblemInstance, options: &PlannerOptions) -> Result<PlanOutcome> {
    options.check()?;
    let t0 = Instant::now();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(options.jobs)
        .build()
        .map_err(|e| Error::Internal(format!("thread pool: {e}")))?;
    let mut trained = None;
    let (plan, clusters, unproven, dropped) = pool.install(|| match options.kind {
        PlannerKind::Greedy => {
            let parts = partition(instance, options, usize::MAX)?;
            let n = parts.values().map(Vec::len).sum();
            Ok((greedy_schedule(instance, &parts), n, 0, Vec::new()))
        }
        PlannerKind::Ilp | PlannerKind::Qubo => solver_plan(instance, options),
        PlannerKind::Ppo | PlannerKind::Alphazero => {
            let (plan, t) = learned_plan(instance, options)?;
            trained = t;
            Ok((plan, 0, 0, Vec::new()))
        }
    })?;
    let plan = plan.with_stats(instance);
    let report = validate_plan(&plan, instance);
    Ok(PlanOutcome {
        plan,
        report,
        clusters,
        unproven_clusters: unproven,
        dropped,
        trained,
        wall_time_s: t0.elapsed().as_secs_f64(),
    })
}

/// Per-satellite clusters, each at most `cap` requests.
fn partition(
    instance: &ProblemInstance,
    options: &PlannerOptions,
    cap: usize,
) -> Result<BTreeMap<String, Vec<Cluster>>> {
    instance
        .satellites
        .keys()
        .map(|sat| {
            let reqs = instance.open_requests_for(sat);
            let clusters = cluster_requests(options.cluster, &reqs, options.k, options.seed)?;
            let clusters = if cap == usize::MAX { clusters } else { split_large(clusters, cap) };
            Ok((sat.clone(), clusters))
        })
        .collect()
}

type SolverResult = (Plan, usize, usize, Vec<String>);

fn solver_plan(instance: &ProblemInstance, options: &PlannerOptions) -> Result<SolverResult> {
    let cap = match options.kind {
        PlannerKind::Qubo => options.qubo_max_cluster,
        _ => options.ilp_max_cluster,
    };
    let parts = partition(instance, options, cap)?;
    let index = instance.request_index();
    let jobs: Vec<(&String, &Ephemeris)> = instance.satellites.iter().collect();
    let results: Vec<(String, Vec<ChainedAcquisition>, usize, usize, Vec<String>)> = jobs
        .par_iter()
        .map(|&(sat, eph)| {
            let clusters = parts.get(sat).map(Vec::as_slice).unwrap_or(&[]);
            let (per_cluster, unproven) = plan_satellite_clusters(clusters, &index, eph, options)?;
            let linked = link_clusters(&per_cluster, &index, eph);
            Ok((sat.clone(), linked.acquisitions, clusters.len(), unproven, linked.dropped))
        })
        .collect::<Result<_>>()?;
    let mut satellites = BTreeMap::new();
    let (mut n_clusters, mut unproven, mut dropped) = (0, 0, Vec::new());
    for (sat, acqs, n, u, d) in results {
        satellites.insert(sat, acqs);
        n_clusters += n;
        unproven += u;
        dropped.extend(d);
    }
    Ok((Plan::new(satellites), n_clusters, unproven, dropped))
}

/// Solves the clusters of one satellite with a rolling window.
///
/// Requests are queued in cluster order. Each solve takes the first `cap`
/// queued requests that can still follow the last committed acquisition,
/// with their windows trimmed accordingly. Chosen acquisitions that start
/// before the next queued request opens are committed; the rest go back to
/// the queue. Every solve commits an acquisition or retires a request, so
/// the loop ends.
fn plan_satellite_clusters(
    clusters: &[Cluster],
    index: &BTreeMap<&str, &AcquisitionRequest>,
    eph: &Ephemeris,
    options: &PlannerOptions,
) -> Result<(Vec<Vec<ChainedAcquisition>>, usize)> {
    let (cap, step) = match options.kind {
        PlannerKind::Qubo => (options.qubo_max_cluster, options.qubo_step_s),
        _ => (options.ilp_max_cluster, options.step_s),
    };
    let mut queue: std::collections::VecDeque<&AcquisitionRequest> = clusters
        .iter()
        .flat_map(|c| c.request_ids.iter())
        .filter_map(|id| index.get(id.as_str()).copied())
        .collect();
    let mut out = Vec::new();
    let mut prev: Option<(&AcquisitionRequest, i64)> = None;
    let mut unproven = 0;
    let mut solves = 0u64;
    loop {
        let mut window: Vec<(&AcquisitionRequest, i64)> = Vec::with_capacity(cap);
        while window.len() < cap {
            let Some(r) = queue.pop_front() else { break };
            if let Some(s) = trimmed_start(prev, r, eph) {
                window.push((r, s));
            }
        }
        if window.is_empty() {
            break;
        }
        let model = model_for(&window, eph, step)?;
        let assignment = match options.kind {
            PlannerKind::Qubo => solve_qubo(&model, options, solves)?,
            _ if options.use_oracle => brute_force_oracle(&model)?,
            _ => solve_bb(&model, options.time_limit_s),
        };
        solves += 1;
        if !assignment.proven {
            unproven += 1;
        }
        let acqs = extract_acquisitions(&assignment, &model, eph, prev)?;
        let horizon = queue.front().map_or(i64::MAX, |r| r.dto_start_ms);
        let keep = acqs.iter().take_while(|a| a.acquisition_start_ms < horizon).count().max(1).min(acqs.len());
        let committed: std::collections::BTreeSet<&str> =
            acqs[..keep].iter().map(|a| a.request_id.as_str()).collect();
        // requests left over go back in front, in their window order; an
        // empty selection gives up only on the first request
        let requeue: &[(&AcquisitionRequest, i64)] = match (acqs.is_empty(), keep < acqs.len()) {
            (true, _) => &window[1..],
            (false, true) => &window,
            (false, false) => &[],
        };
        for &(r, _) in requeue.iter().rev() {
            if !committed.contains(r.request_id.as_str()) {
                queue.push_front(r);
            }
        }
        if let Some(last) = acqs[..keep].last() {
            prev = Some((index[last.request_id.as_str()], last.end_ms()));
        }
        out.push(acqs[..keep].to_vec());
    }
    Ok((out, unproven))
}

/// Lowest-energy feasible state over several annealing runs; the empty
/// selection when no run ends feasible.
fn solve_qubo(model: &IlpModel, options: &PlannerOptions, salt: u64) -> Result<Assignment> {
    let qubo = to_qubo(model);
    let mut best: Option<(Vec<u8>, f64)> = None;
    for r in 0..options.anneal_restarts {
        let seed = options.seed.wrapping_mul(0x100_0000_01b3).wrapping_add(salt << 8 | r as u64);
        let (bits, _) = anneal(&qubo, options.anneal_sweeps, options.anneal_t.0, options.anneal_t.1, seed)?;
        let original = qubo.decode(&bits);
        if model.violated_rows(original).is_empty() {
            let obj = model.evaluate(original);
            if best.as_ref().is_none_or(|(_, b)| obj > *b) {
                best = Some((original.to_vec(), obj));
            }
        }
    }
    let (bits, objective) = best.unwrap_or_else(|| {
        let zeros = vec![0u8; model.n_vars()];
        let obj = model.evaluate(&zeros);
        (zeros, obj)
    });
    Ok(Assignment {
        bits,
        objective,
        proven: false,
        nodes: 0,
    })
}

fn learned_plan(instance: &ProblemInstance, options: &PlannerOptions) -> Result<(Plan, Option<(Net, Vec<CurvePoint>)>)> {
    let envs = satellite_envs(instance);
    if envs.iter().all(|e| e.is_done()) {
        let empty = instance.satellites.keys().map(|s| (s.clone(), Vec::new())).collect();
        return Ok((Plan::new(empty), None));
    }
    let mode = match options.kind {
        PlannerKind::Ppo => Deployment::Argmax,
        _ => Deployment::Search(options.deploy_mcts),
    };
    if let Some(net) = &options.policy {
        return Ok((plan_with_policy(instance, net, &mode)?, None));
    }
    let (net, curve) = match options.kind {
        PlannerKind::Ppo => train_ppo(&envs, &options.ppo, options.seed)?,
        _ => train_alphazero(&envs, &options.alphazero, options.seed)?,
    };
    let plan = plan_with_policy(instance, &net, &mode)?;
    Ok((plan, Some((net, curve))))
}

/// One line of a planner comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkRow {
    pub planner: String,
    pub cluster: String,
    /// Completion percentage for priorities 1 to 4.
    pub rates: [f64; 4],
    pub completed: usize,
    pub total: usize,
    pub wall_time_s: f64,
    pub valid: bool,
}

impl BenchmarkRow {
    pub fn from_outcome(options: &PlannerOptions, outcome: &PlanOutcome) -> Self {
        let s = &outcome.plan.stats;
        Self {
            planner: options.kind.name().to_string(),
            cluster: options.cluster.name().to_string(),
            rates: [s.p1.rate, s.p2.rate, s.p3.rate, s.p4.rate],
            completed: s.completed_total(),
            total: s.p1.total + s.p2.total + s.p3.total + s.p4.total,
            wall_time_s: outcome.wall_time_s,
            valid: outcome.report.ok,
        }
    }
}

/// Runs every option set on `instance`, in the given order.
pub fn run_benchmark(instance: &ProblemInstance, runs: &[PlannerOptions]) -> Result<Vec<BenchmarkRow>> {
    if runs.is_empty() {
        return Err(Error::Argument("no planners to benchmark".into()));
    }
    runs.iter()
        .map(|o| run_planner(instance, o).map(|out| BenchmarkRow::from_outcome(o, &out)))
        .collect()
}

pub const BENCHMARK_CSV_HEADER: &str = "planner,cluster,p1,p2,p3,p4,completed,total,wall_s,valid";

/// Rates are printed with two decimals; the console table uses the same
/// strings.
pub fn benchmark_csv(rows: &[BenchmarkRow]) -> String {
    let mut s = format!("{BENCHMARK_CSV_HEADER}\n");
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{:.2},{:.2},{:.2},{:.2},{},{},{:.3},{}",
            r.planner, r.cluster, r.rates[0], r.rates[1], r.rates[2], r.rates[3], r.completed, r.total, r.wall_time_s, r.valid
        );
    }
    s
}

/// Per-priority completion table.
pub fn completion_table(plan: &Plan) -> String {
    let mut s = String::from("priority  completed  total  rate%\n");
    for p in 1..=4u8 {
        let st = plan.stats.by_priority(p);
        let _ = writeln!(s, "{:>8}  {:>9}  {:>5}  {:>5.2}", p, st.completed, st.total, st.rate);
    }
    s
}
