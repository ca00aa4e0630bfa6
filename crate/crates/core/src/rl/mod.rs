//! Reinforcement-learning planners.

pub mod alphazero;
pub mod checkpoint;
pub mod env;
pub mod mcts;
pub mod net;
pub mod ppo;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Plan, ProblemInstance};
use env::{Environment, SatEnv, SAT_OBS_DIM, VIEW_SLOTS};
use mcts::{mcts_search, MctsConfig};
use net::{masked_softmax, Net};

/// One point of a learning curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub step: usize,
    pub mean_reward: f64,
}

/// How a trained network picks actions when used as a planner.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Deployment {
    /// Most probable committing action.
    Argmax,
    /// Most visited action of a search guided by the network.
    Search(MctsConfig),
}

/// Satellite-centred environments for every satellite of `instance`.
pub fn satellite_envs(instance: &ProblemInstance) -> Vec<SatEnv> {
    instance
        .satellites
        .iter()
        .map(|(id, eph)| SatEnv::new(id, eph.clone(), &instance.open_requests_for(id)))
        .collect()
}

fn pick(net: &Net, env: &SatEnv, mode: &Deployment, seed: u64) -> Result<usize> {
    let allowed = env.committing_actions();
    if !allowed.iter().any(|&a| a) {
        // nothing fits yet: any pick lets the clock advance
        return Ok(0);
    }
    let scores = match mode {
        Deployment::Argmax => masked_softmax(&net.forward(&env.observation())?.logits, &allowed),
        Deployment::Search(config) => {
            let mut visits = mcts_search(env, net, config, seed)?.distribution;
            if visits.iter().zip(&allowed).all(|(v, &ok)| !ok || *v == 0.0) {
                visits = masked_softmax(&net.forward(&env.observation())?.logits, &allowed);
            }
            visits
        }
    };
    let mut best = (None, f64::NEG_INFINITY);
    for (a, (&s, &ok)) in scores.iter().zip(&allowed).enumerate() {
        if ok && s > best.1 {
            best = (Some(a), s);
        }
    }
    best.0.ok_or_else(|| Error::Internal("no committing action selected".into()))
}

/// Rolls the policy out on every satellite and returns the committed plan.
/// Only actions that commit a request are considered, so the rollout ends
/// after at most one step per request plus the waiting steps.
pub fn plan_with_policy(instance: &ProblemInstance, net: &Net, mode: &Deployment) -> Result<Plan> {
    if net.config.obs_dim != SAT_OBS_DIM || net.config.n_actions != VIEW_SLOTS {
        return Err(Error::Argument(format!(
            "policy expects {}x{} but the satellite environment is {}x{}",
            net.config.obs_dim, net.config.n_actions, SAT_OBS_DIM, VIEW_SLOTS
        )));
    }
    let mut satellites = BTreeMap::new();
    for (k, mut env) in satellite_envs(instance).into_iter().enumerate() {
        let mut step = 0u64;
        while !env.is_done() {
            let a = pick(net, &env, mode, (k as u64) << 32 | step)?;
            env.step(a)?;
            step += 1;
        }
        satellites.insert(env.satellite_id().to_string(), env.committed().to_vec());
    }
    Ok(Plan::new(satellites).with_stats(instance))
}
