#![allow(dead_code)]

use num_complex::Complex64;
use orbit_sched::clustering::ClusterMethod;
use orbit_sched::ilp::{model_for, IlpModel};
use orbit_sched::model::{generate_instance_with, AcquisitionRequest, GeneratorConfig, PriorityMix, ProblemInstance};
use orbit_sched::planner::{PlannerKind, PlannerOptions};
use orbit_sched::quantum::{statevector, PqcSpec};
use orbit_sched::qubo::{qubo_energy, to_qubo, PenaltyKind, QuboModel};
use orbit_sched::rl::env::Environment;
use orbit_sched::rl::mcts::{mcts_search, MctsConfig, UniformEvaluator};
use orbit_sched::Result;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Short horizon with every request in a burst, so windows overlap.
pub fn dense_config(horizon_s: i64) -> GeneratorConfig {
    GeneratorConfig {
        horizon_s,
        burst_fraction: 1.0,
        bursts_per_day: 30.0,
        ..GeneratorConfig::default()
    }
}

pub fn toy(n_sats: usize, n_requests: usize, seed: u64) -> ProblemInstance {
    generate_instance_with(&dense_config(3000), n_sats, n_requests, &PriorityMix::default(), seed).unwrap()
}

/// Generator settings for the benchmark: every request sits in one of 30
/// daily bursts, so windows on a satellite overlap heavily.
pub fn contested_config(horizon_s: i64) -> GeneratorConfig {
    GeneratorConfig {
        horizon_s,
        burst_fraction: 1.0,
        bursts_per_day: 30.0,
        burst_sigma_s: 120.0,
        ..GeneratorConfig::default()
    }
}

/// The benchmark instance: 200 requests on 2 satellites over 8640 s.
pub fn benchmark_instance() -> ProblemInstance {
    generate_instance_with(&contested_config(8640), 2, 200, &PriorityMix::default(), 42).unwrap()
}

/// Benchmark settings: the defaults, with AlphaZero trained on the instance
/// for 30 iterations and deployed with 256 simulations per move.
pub fn benchmark_options(kind: PlannerKind, cluster: ClusterMethod) -> PlannerOptions {
    let mut o = PlannerOptions::new(kind, cluster);
    o.alphazero.iterations = 30;
    o.alphazero.episodes_per_iteration = 8;
    o.alphazero.simulations = 64;
    o.deploy_mcts.simulations = 256;
    o
}

/// Fuzz instance `i`: 1 or 2 satellites, 1 to 12 requests, dense or spread.
pub fn fuzz_instance(i: u64) -> ProblemInstance {
    let n_sats = 1 + (i % 2) as usize;
    let n_requests = 1 + ((i * 7) % 12) as usize;
    let config = if i % 3 == 0 { GeneratorConfig { horizon_s: 3000, ..GeneratorConfig::default() } } else { dense_config(3000) };
    generate_instance_with(&config, n_sats, n_requests, &PriorityMix::default(), 20_000 + i).unwrap()
}

/// Compiled two-request clusters with at most `max_ilp_vars` ILP variables,
/// over a range of seeds and grid steps.
pub fn two_request_models(count: usize, max_ilp_vars: usize) -> Vec<(IlpModel, QuboModel)> {
    let mut out = Vec::new();
    let mut seed = 0;
    while out.len() < count {
        let inst = toy(1, 2, 500 + seed);
        let eph = inst.satellites.values().next().unwrap();
        let mut reqs: Vec<&AcquisitionRequest> = inst.requests.iter().collect();
        reqs.sort_by_key(|r| r.dto_start_ms);
        let win: Vec<_> = reqs.iter().map(|r| (*r, r.dto_start_ms)).collect();
        let step = [60, 120, 240, 480][(seed % 4) as usize];
        seed += 1;
        let model = model_for(&win, eph, step).unwrap();
        if model.n_requests() == 2 && model.n_vars() <= max_ilp_vars {
            let qubo = to_qubo(&model);
            out.push((model, qubo));
        }
    }
    out
}

/// Exact facts about a QUBO found by enumeration.
#[derive(Debug)]
pub struct Exhaustive {
    pub min_energy: f64,
    pub argmin: Vec<u8>,
    pub max_feasible: f64,
    pub min_infeasible: f64,
}

/// Enumerates the ILP bits; slack blocks touch only their own row, so
/// each is minimized on its own, and the cheapest infeasible state either
/// has infeasible ILP bits or moves one slack block off its optimum.
pub fn exhaustive(qubo: &QuboModel) -> Exhaustive {
    let n = qubo.n_original;
    let slack: Vec<(usize, usize)> = qubo
        .blocks
        .iter()
        .filter_map(|b| match b.kind {
            PenaltyKind::Slack { slack_start, width } => Some((slack_start, width)),
            _ => None,
        })
        .collect();
    let set = |bits: &mut [u8], (start, width): (usize, usize), v: usize| {
        for i in 0..width {
            bits[start + i] = ((v >> i) & 1) as u8;
        }
    };
    let mut r = Exhaustive {
        min_energy: f64::INFINITY,
        argmin: Vec::new(),
        max_feasible: f64::NEG_INFINITY,
        min_infeasible: f64::INFINITY,
    };
    let mut bits = vec![0u8; qubo.n_vars()];
    for x in 0u64..(1 << n) {
        for (i, b) in bits.iter_mut().enumerate().take(n) {
            *b = ((x >> i) & 1) as u8;
        }
        for &blk in &slack {
            let best = (0..1 << blk.1)
                .min_by(|&a, &b| {
                    let mut ba = bits.clone();
                    set(&mut ba, blk, a);
                    let mut bb = bits.clone();
                    set(&mut bb, blk, b);
                    qubo_energy(qubo, &ba).unwrap().total_cmp(&qubo_energy(qubo, &bb).unwrap())
                })
                .unwrap();
            set(&mut bits, blk, best);
        }
        let e = qubo_energy(qubo, &bits).unwrap();
        if e < r.min_energy {
            r.min_energy = e;
            r.argmin = bits.clone();
        }
        let mut classify = |b: &[u8], e: f64| {
            if qubo.is_feasible(b) {
                r.max_feasible = r.max_feasible.max(e);
            } else {
                r.min_infeasible = r.min_infeasible.min(e);
            }
        };
        classify(&bits, e);
        for &blk in &slack {
            for v in 0..1 << blk.1 {
                let mut alt = bits.clone();
                set(&mut alt, blk, v);
                classify(&alt, qubo_energy(qubo, &alt).unwrap());
            }
        }
    }
    r
}

/// Planner options with small training and annealing budgets, for tests
/// that run every planner many times.
pub fn quick_options(kind: PlannerKind, cluster: ClusterMethod) -> PlannerOptions {
    let mut o = PlannerOptions::new(kind, cluster);
    o.anneal_sweeps = 2000;
    o.anneal_restarts = 2;
    o.ppo.total_steps = 128;
    o.ppo.rollout_steps = 64;
    o.ppo.minibatch = 32;
    o.ppo.hidden = [16, 8];
    o.alphazero.iterations = 1;
    o.alphazero.episodes_per_iteration = 2;
    o.alphazero.simulations = 4;
    o.alphazero.hidden = [16, 32];
    o.deploy_mcts.simulations = 4;
    o
}

/// Coarsest step that keeps every request of `reqs` at 12 candidates or fewer.
pub fn step_for_12(reqs: &[&AcquisitionRequest]) -> i64 {
    reqs.iter()
        .map(|r| {
            let span = r.dto_end_ms - r.acquisition_duration_ms() - r.dto_start_ms;
            (span + 10_999) / 11_000
        })
        .max()
        .unwrap_or(1)
        .max(1)
}

/// Cluster `i` of the seeded family: 1 to 6 requests of one satellite.
pub fn ilp_cluster(i: u64) -> (ProblemInstance, i64) {
    let n = 1 + (i % 6) as usize;
    let inst = toy(1, n, 1000 + i);
    let reqs: Vec<&AcquisitionRequest> = inst.requests.iter().collect();
    let step = step_for_12(&reqs);
    (inst, step)
}

pub fn model_of(inst: &ProblemInstance, step: i64) -> IlpModel {
    let eph = inst.satellites.values().next().unwrap();
    let mut reqs: Vec<&AcquisitionRequest> = inst.requests.iter().collect();
    reqs.sort_by_key(|r| r.dto_start_ms);
    let win: Vec<_> = reqs.iter().map(|r| (*r, r.dto_start_ms)).collect();
    model_for(&win, eph, step).unwrap()
}

/// One-step bandit: arm `good` pays 1, every other arm 0.
#[derive(Debug, Clone)]
pub struct Bandit {
    pub arms: usize,
    pub good: usize,
    pub done: bool,
}

impl Environment for Bandit {
    fn obs_dim(&self) -> usize {
        1
    }
    fn n_actions(&self) -> usize {
        self.arms
    }
    fn observation(&self) -> Vec<f64> {
        vec![0.0]
    }
    fn action_mask(&self) -> Vec<bool> {
        vec![true; self.arms]
    }
    fn step(&mut self, action: usize) -> Result<(f64, bool)> {
        self.done = true;
        Ok((if action == self.good { 1.0 } else { 0.0 }, true))
    }
    fn is_done(&self) -> bool {
        self.done
    }
    fn max_remaining_reward(&self) -> f64 {
        if self.done {
            0.0
        } else {
            1.0
        }
    }
}

/// Depth-limited walk paying 1 for every step that takes action 0.
#[derive(Debug, Clone)]
pub struct Walk {
    pub depth: usize,
}

impl Environment for Walk {
    fn obs_dim(&self) -> usize {
        1
    }
    fn n_actions(&self) -> usize {
        3
    }
    fn observation(&self) -> Vec<f64> {
        vec![self.depth as f64]
    }
    fn action_mask(&self) -> Vec<bool> {
        vec![true, true, self.depth % 2 == 0]
    }
    fn step(&mut self, action: usize) -> Result<(f64, bool)> {
        self.depth -= 1;
        Ok((if action == 0 { 1.0 } else { 0.0 }, self.depth == 0))
    }
    fn is_done(&self) -> bool {
        self.depth == 0
    }
    fn max_remaining_reward(&self) -> f64 {
        self.depth as f64
    }
}

impl Bandit {
    pub fn new(arms: usize, good: usize) -> Self {
        Self { arms, good, done: false }
    }
}

/// Searches a depth-5 walk with `simulations` simulations and checks that
/// every node's visits are one more than its children's (all of them at
/// the root) and that masked actions never get an edge.
pub fn visit_accounting_holds(simulations: u32) -> bool {
    let config = MctsConfig { simulations: simulations as usize, ..MctsConfig::default() };
    let r = mcts_search(&Walk { depth: 5 }, &UniformEvaluator { value: 0.5 }, &config, 0).unwrap();
    let child_visits = |i: usize| -> u32 {
        r.nodes[i].edges.iter().filter_map(|e| e.2).map(|c| r.nodes[c].visits).sum()
    };
    r.nodes[0].visits == simulations
        && child_visits(0) == simulations
        && r.nodes.iter().enumerate().skip(1).all(|(i, n)| n.terminal || n.visits == 1 + child_visits(i))
        && r.nodes.iter().all(|n| {
            let mask = n.env.action_mask();
            n.edges.iter().all(|e| mask[e.0])
        })
}

type Matrix = Vec<Vec<Complex64>>;

/// Full 2^n × 2^n operator of a one-qubit gate on qubit `k`.
fn lift(n: usize, k: usize, g: [[Complex64; 2]; 2]) -> Matrix {
    let d = 1 << n;
    let mut m = vec![vec![Complex64::new(0.0, 0.0); d]; d];
    for (i, row) in m.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            let mut x = Complex64::new(1.0, 0.0);
            for q in 0..n {
                let (bi, bj) = ((i >> q) & 1, (j >> q) & 1);
                x *= if q == k { g[bi][bj] } else if bi == bj { Complex64::new(1.0, 0.0) } else { Complex64::new(0.0, 0.0) };
            }
            *v = x;
        }
    }
    m
}

fn cnot(n: usize, c: usize, t: usize) -> Matrix {
    let d = 1 << n;
    let mut m = vec![vec![Complex64::new(0.0, 0.0); d]; d];
    for (j, _) in (0..d).enumerate() {
        let i = if (j >> c) & 1 == 1 { j ^ (1 << t) } else { j };
        m[i][j] = Complex64::new(1.0, 0.0);
    }
    m
}

fn rx(theta: f64) -> [[Complex64; 2]; 2] {
    let (c, s) = ((theta / 2.0).cos(), (theta / 2.0).sin());
    [[Complex64::new(c, 0.0), Complex64::new(0.0, -s)], [Complex64::new(0.0, -s), Complex64::new(c, 0.0)]]
}

fn rz(phi: f64) -> [[Complex64; 2]; 2] {
    let z = Complex64::new(0.0, 0.0);
    [[Complex64::from_polar(1.0, -phi / 2.0), z], [z, Complex64::from_polar(1.0, phi / 2.0)]]
}

fn matmul(a: &Matrix, b: &Matrix) -> Matrix {
    let d = a.len();
    let mut out = vec![vec![Complex64::new(0.0, 0.0); d]; d];
    for i in 0..d {
        for k in 0..d {
            if a[i][k] != Complex64::new(0.0, 0.0) {
                for j in 0..d {
                    out[i][j] += a[i][k] * b[k][j];
                }
            }
        }
    }
    out
}

/// Final state from multiplying full gate matrices, applied to |0…0⟩.
pub fn dense_state(spec: &PqcSpec, params: &[f64], features: &[f64]) -> Vec<Complex64> {
    let n = spec.n_qubits;
    let d = 1 << n;
    let mut u: Matrix = (0..d)
        .map(|i| (0..d).map(|j| Complex64::new((i == j) as u8 as f64, 0.0)).collect())
        .collect();
    let apply = |u: &mut Matrix, g: Matrix| *u = matmul(&g, u);
    let ring = |u: &mut Matrix| {
        if spec.entangle && n > 1 {
            for i in 0..n {
                apply(u, cnot(n, i, (i + 1) % n));
            }
        }
    };
    for k in 0..n {
        apply(&mut u, lift(n, k, rx(params[k])));
    }
    ring(&mut u);
    for r in 0..spec.n_reps {
        for k in 0..n {
            apply(&mut u, lift(n, k, rz(features[r * n + k])));
        }
        for k in 0..n {
            apply(&mut u, lift(n, k, rx(params[(r + 1) * n + k])));
        }
        ring(&mut u);
    }
    (0..d).map(|i| u[i][0]).collect()
}

/// Compares the simulator with the dense oracle on `draws` random inputs.
pub fn statevector_matches_dense(spec: &PqcSpec, draws: usize, seed: u64) -> bool {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..draws).all(|_| {
        let p: Vec<f64> = (0..spec.n_params()).map(|_| rng.random_range(-3.2..3.2)).collect();
        let x: Vec<f64> = (0..spec.n_features()).map(|_| rng.random_range(-3.0..3.0)).collect();
        let sv = statevector(spec, &p, &x).unwrap();
        sv.amplitudes.iter().zip(&dense_state(spec, &p, &x)).all(|(a, b)| (a - b).norm() < 1e-10)
    })
}
