//! Self-play training of the search-guided policy.
//!
//! Each outer iteration plays a batch of episodes in parallel, every move
//! chosen by sampling the MCTS visit distribution, then fits the network
//! to the visit distributions and to the realized return-to-go.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::env::Environment;
use super::mcts::{mcts_search, MctsConfig};
use super::net::{masked_softmax, Adam, Net, NetConfig, PolicyHead};
use super::ppo::sample;
use super::CurvePoint;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AlphaZeroConfig {
    pub iterations: usize,
    pub episodes_per_iteration: usize,
    pub simulations: usize,
    pub c_puct: f64,
    pub dirichlet_alpha: f64,
    pub dirichlet_weight: f64,
    pub epochs: usize,
    pub minibatch: usize,
    pub lr: f64,
    pub max_episode_steps: usize,
    pub hidden: [usize; 2],
    pub head: PolicyHead,
}

impl Default for AlphaZeroConfig {
    fn default() -> Self {
        Self {
            iterations: 10,
            episodes_per_iteration: 8,
            simulations: 32,
            c_puct: 1.5,
            dirichlet_alpha: 0.3,
            dirichlet_weight: 0.25,
            epochs: 2,
            minibatch: 32,
            lr: 1e-3,
            max_episode_steps: 1000,
            hidden: [256, 32],
            head: PolicyHead::Hybrid,
        }
    }
}

impl AlphaZeroConfig {
    fn check(&self) -> Result<()> {
        let ok = self.iterations > 0
            && self.episodes_per_iteration > 0
            && self.simulations > 0
            && self.c_puct > 0.0
            && self.dirichlet_alpha >= 0.0
            && (0.0..=1.0).contains(&self.dirichlet_weight)
            && self.epochs > 0
            && self.minibatch > 0
            && self.lr > 0.0
            && self.max_episode_steps > 0;
        if ok {
            Ok(())
        } else {
            Err(Error::Argument(format!("unusable AlphaZero configuration {self:?}")))
        }
    }

    pub fn mcts(&self) -> MctsConfig {
        MctsConfig {
            simulations: self.simulations,
            c_puct: self.c_puct,
            dirichlet_alpha: self.dirichlet_alpha,
            dirichlet_weight: self.dirichlet_weight,
        }
    }
}

/// One stored self-play position.
#[derive(Debug, Clone, PartialEq)]
pub struct Example {
    pub obs: Vec<f64>,
    pub mask: Vec<bool>,
    /// Visit distribution of the search.
    pub policy: Vec<f64>,
    /// Return-to-go from this position.
    pub value: f64,
}

/// Mean cross-entropy against the visit distributions and mean squared
/// value error (scaled to the value range) over `batch`.
pub fn losses(net: &Net, batch: &[Example]) -> Result<(f64, f64)> {
    let scale = net.config.value_scale;
    let (mut ce, mut mse) = (0.0, 0.0);
    for ex in batch {
        let fwd = net.forward(&ex.obs)?;
        let p = masked_softmax(&fwd.logits, &ex.mask);
        ce -= ex
            .policy
            .iter()
            .zip(&p)
            .filter(|(t, _)| **t > 0.0)
            .map(|(t, q)| t * q.max(1e-300).ln())
            .sum::<f64>();
        mse += ((fwd.value - ex.value) / scale).powi(2);
    }
    let n = batch.len().max(1) as f64;
    Ok((ce / n, mse / n))
}

/// One Adam step on the summed policy and value loss of `batch`.
pub fn fit_step(net: &mut Net, adam: &mut Adam, batch: &[Example]) -> Result<()> {
    let scale = net.config.value_scale;
    let m = batch.len().max(1) as f64;
    let mut grad = vec![0.0; net.n_params()];
    for ex in batch {
        let fwd = net.forward(&ex.obs)?;
        let p = masked_softmax(&fwd.logits, &ex.mask);
        let dlogits: Vec<f64> = p
            .iter()
            .zip(&ex.policy)
            .zip(&ex.mask)
            .map(|((q, t), &ok)| if ok { (q - t) / m } else { 0.0 })
            .collect();
        let dvalue = 2.0 * (fwd.value - ex.value) / scale / scale / m;
        net.backward(&ex.obs, &fwd, &dlogits, dvalue, &mut grad)?;
    }
    if grad.iter().any(|g| !g.is_finite()) {
        return Err(Error::Divergence("non-finite AlphaZero gradient".into()));
    }
    adam.step(&mut net.params, &grad);
    Ok(())
}

/// Plays one episode, sampling moves from the visit distribution.
fn self_play<E: Environment>(net: &Net, start: &E, config: &AlphaZeroConfig, seed: u64) -> Result<(Vec<Example>, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mcts = config.mcts();
    let mut env = start.clone();
    let mut examples = Vec::new();
    let mut rewards = Vec::new();
    let mut step = 0u64;
    while !env.is_done() && rewards.len() < config.max_episode_steps {
        let search = mcts_search(&env, net, &mcts, seed.wrapping_add(step.wrapping_mul(0x9e37_79b9)))?;
        let action = sample(&search.distribution, &mut rng);
        examples.push(Example {
            obs: env.observation(),
            mask: env.action_mask(),
            policy: search.distribution,
            value: 0.0,
        });
        rewards.push(env.step(action)?.0);
        step += 1;
    }
    let mut g = 0.0;
    for (ex, r) in examples.iter_mut().zip(&rewards).rev() {
        g += r;
        ex.value = g;
    }
    Ok((examples, g))
}

/// Trains on episodes drawn round-robin from `envs`. The curve reports,
/// per iteration, the mean self-play reward divided by the best reward
/// each start state could offer.
pub fn train_alphazero<E: Environment + Send + Sync>(
    envs: &[E],
    config: &AlphaZeroConfig,
    seed: u64,
) -> Result<(Net, Vec<CurvePoint>)> {
    config.check()?;
    // finished start states have no valid action to learn from
    let envs: Vec<&E> = envs.iter().filter(|e| !e.is_done()).collect();
    let first = envs
        .first()
        .ok_or_else(|| Error::Argument("no training environment has a decision to make".into()))?;
    let mut net_config = NetConfig::new(first.obs_dim(), first.n_actions(), config.head);
    net_config.hidden = config.hidden;
    net_config.value_scale = envs.iter().map(|e| e.max_remaining_reward()).fold(1.0, f64::max);
    let mut net = Net::new(net_config, seed)?;
    let mut adam = Adam::new(net.n_params(), config.lr);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5bd1_e995);
    let mut curve = Vec::with_capacity(config.iterations);

    for it in 0..config.iterations {
        let jobs: Vec<(usize, u64)> = (0..config.episodes_per_iteration)
            .map(|e| {
                let k = it * config.episodes_per_iteration + e;
                (k % envs.len(), seed.wrapping_mul(1_000_003).wrapping_add(k as u64))
            })
            .collect();
        let played: Vec<(Vec<Example>, f64)> = jobs
            .par_iter()
            .map(|&(i, s)| self_play(&net, envs[i], config, s))
            .collect::<Result<_>>()?;
        let mut normalized = 0.0;
        for (&(i, _), (_, reward)) in jobs.iter().zip(&played) {
            normalized += reward / envs[i].max_remaining_reward().max(1.0);
        }
        curve.push(CurvePoint {
            step: it + 1,
            mean_reward: normalized / jobs.len() as f64,
        });
        let mut buffer: Vec<Example> = played.into_iter().flat_map(|(ex, _)| ex).collect();
        for _ in 0..config.epochs {
            buffer.shuffle(&mut rng);
            for mb in buffer.chunks(config.minibatch) {
                fit_step(&mut net, &mut adam, mb)?;
            }
        }
        log::debug!("alphazero iteration {} mean normalized reward {:.3}", it + 1, curve[it].mean_reward);
    }
    Ok((net, curve))
}
