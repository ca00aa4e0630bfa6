//! Monte Carlo tree search with PUCT selection.
//!
//! Every simulation walks down from the root and creates exactly one new
//! node, which is scored by the evaluator instead of a random rollout.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};

use super::env::Environment;
use super::net::{masked_softmax, Net};
use crate::error::{Error, Result};

/// Supplies action priors and a value estimate for a state.
pub trait Evaluator<E> {
    fn evaluate(&self, env: &E) -> Result<(Vec<f64>, f64)>;
}

/// Uniform priors over valid actions and a constant value.
#[derive(Debug, Clone, Copy, Default)]
pub struct UniformEvaluator {
    pub value: f64,
}

impl<E: Environment> Evaluator<E> for UniformEvaluator {
    fn evaluate(&self, env: &E) -> Result<(Vec<f64>, f64)> {
        let mask = env.action_mask();
        let n = mask.iter().filter(|&&m| m).count().max(1) as f64;
        Ok((mask.iter().map(|&m| if m { 1.0 / n } else { 0.0 }).collect(), self.value))
    }
}

impl<E: Environment> Evaluator<E> for Net {
    fn evaluate(&self, env: &E) -> Result<(Vec<f64>, f64)> {
        let fwd = self.forward(&env.observation())?;
        Ok((masked_softmax(&fwd.logits, &env.action_mask()), fwd.value))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MctsConfig {
    pub simulations: usize,
    pub c_puct: f64,
    /// Root exploration noise; 0 disables it.
    pub dirichlet_alpha: f64,
    pub dirichlet_weight: f64,
}

impl Default for MctsConfig {
    fn default() -> Self {
        Self {
            simulations: 64,
            c_puct: 1.5,
            dirichlet_alpha: 0.0,
            dirichlet_weight: 0.25,
        }
    }
}

#[derive(Debug, Clone)]
pub struct MctsNode<E> {
    pub env: E,
    /// Reward collected on the edge into this node.
    pub reward: f64,
    pub visits: u32,
    /// Sum of backed-up returns from this node on.
    pub total_value: f64,
    pub terminal: bool,
    /// `(action, prior, child)` for every valid action.
    pub edges: Vec<(usize, f64, Option<usize>)>,
}

#[derive(Debug, Clone)]
pub struct SearchResult<E> {
    /// Normalized visit counts over all actions; empty for a terminal root.
    pub distribution: Vec<f64>,
    pub visit_counts: Vec<u32>,
    /// `W/N` at the root.
    pub root_value: f64,
    pub nodes: Vec<MctsNode<E>>,
}

struct Tree<'a, E, V> {
    nodes: Vec<MctsNode<E>>,
    evaluator: &'a V,
    q_min: f64,
    q_max: f64,
}

impl<E: Environment, V: Evaluator<E>> Tree<'_, E, V> {
    /// Creates a node and returns its value estimate.
    fn add(&mut self, env: E, reward: f64, noise: Option<&[f64]>, weight: f64) -> Result<(usize, f64)> {
        let terminal = env.is_done();
        let (edges, value) = if terminal {
            (Vec::new(), 0.0)
        } else {
            let (priors, value) = self.evaluator.evaluate(&env)?;
            let mask = env.action_mask();
            let valid: Vec<usize> = (0..mask.len()).filter(|&a| mask[a]).collect();
            let edges = valid
                .iter()
                .enumerate()
                .map(|(k, &a)| {
                    let p = match noise {
                        Some(eta) => (1.0 - weight) * priors[a] + weight * eta[k],
                        None => priors[a],
                    };
                    (a, p, None)
                })
                .collect();
            (edges, value.clamp(0.0, env.max_remaining_reward()))
        };
        self.nodes.push(MctsNode {
            env,
            reward,
            visits: 0,
            total_value: 0.0,
            terminal,
            edges,
        });
        Ok((self.nodes.len() - 1, value))
    }

    fn q_of(&self, child: usize) -> f64 {
        let c = &self.nodes[child];
        c.reward + c.total_value / c.visits as f64
    }

    fn normalized(&self, q: f64) -> f64 {
        if self.q_max > self.q_min {
            (q - self.q_min) / (self.q_max - self.q_min)
        } else {
            q.clamp(0.0, 1.0)
        }
    }

    fn select(&self, node: usize, c_puct: f64) -> usize {
        let n = &self.nodes[node];
        let sqrt_n = (n.visits as f64).sqrt();
        let mut best = (0, f64::NEG_INFINITY);
        for (k, &(_, prior, child)) in n.edges.iter().enumerate() {
            let (q, visits) = match child {
                Some(c) if self.nodes[c].visits > 0 => (self.normalized(self.q_of(c)), self.nodes[c].visits),
                _ => (0.0, 0),
            };
            let score = q + c_puct * prior * sqrt_n / (1.0 + visits as f64);
            if score > best.1 {
                best = (k, score);
            }
        }
        best.0
    }

    fn simulate(&mut self, root: usize, c_puct: f64) -> Result<()> {
        let mut path = vec![root];
        let mut node = root;
        let leaf_value;
        loop {
            if self.nodes[node].terminal {
                leaf_value = 0.0;
                break;
            }
            let k = self.select(node, c_puct);
            let (action, _, child) = self.nodes[node].edges[k];
            match child {
                Some(c) => {
                    node = c;
                    path.push(c);
                }
                None => {
                    let mut env = self.nodes[node].env.clone();
                    let (reward, _) = env.step(action)?;
                    let (c, value) = self.add(env, reward, None, 0.0)?;
                    self.nodes[node].edges[k].2 = Some(c);
                    path.push(c);
                    leaf_value = value;
                    break;
                }
            }
        }
        let mut g = leaf_value;
        for &i in path.iter().rev() {
            let n = &mut self.nodes[i];
            n.visits += 1;
            n.total_value += g;
            g += n.reward;
            if i != root {
                let q = g;
                self.q_min = self.q_min.min(q);
                self.q_max = self.q_max.max(q);
            }
        }
        Ok(())
    }
}

/// Runs `config.simulations` simulations from `root` and returns the
/// normalized root visit counts.
pub fn mcts_search<E: Environment, V: Evaluator<E>>(
    root: &E,
    evaluator: &V,
    config: &MctsConfig,
    seed: u64,
) -> Result<SearchResult<E>> {
    if config.simulations == 0 {
        return Err(Error::Argument("MCTS needs at least one simulation".into()));
    }
    let mut tree = Tree {
        nodes: Vec::new(),
        evaluator,
        q_min: f64::INFINITY,
        q_max: f64::NEG_INFINITY,
    };
    if root.is_done() {
        tree.add(root.clone(), 0.0, None, 0.0)?;
        return Ok(SearchResult {
            distribution: Vec::new(),
            visit_counts: Vec::new(),
            root_value: 0.0,
            nodes: tree.nodes,
        });
    }
    let noise = if config.dirichlet_alpha > 0.0 {
        let n_valid = root.action_mask().iter().filter(|&&m| m).count();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let gamma = Gamma::new(config.dirichlet_alpha, 1.0)
            .map_err(|e| Error::Argument(format!("dirichlet alpha: {e}")))?;
        let draws: Vec<f64> = (0..n_valid).map(|_| gamma.sample(&mut rng)).collect();
        let total: f64 = draws.iter().sum::<f64>().max(1e-300);
        Some(draws.into_iter().map(|d| d / total).collect::<Vec<_>>())
    } else {
        None
    };
    tree.add(root.clone(), 0.0, noise.as_deref(), config.dirichlet_weight)?;
    for _ in 0..config.simulations {
        tree.simulate(0, config.c_puct)?;
    }
    let mut counts = vec![0u32; root.n_actions()];
    for &(a, _, child) in &tree.nodes[0].edges {
        if let Some(c) = child {
            counts[a] = tree.nodes[c].visits;
        }
    }
    let total: u32 = counts.iter().sum();
    let root_node = &tree.nodes[0];
    Ok(SearchResult {
        distribution: counts.iter().map(|&c| c as f64 / total.max(1) as f64).collect(),
        visit_counts: counts,
        root_value: root_node.total_value / root_node.visits.max(1) as f64,
        nodes: tree.nodes,
    })
}
