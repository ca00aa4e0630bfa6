//! Proximal policy optimization with the clipped surrogate and GAE.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::env::Environment;
use super::net::{masked_softmax, Adam, Net, NetConfig, PolicyHead};
use super::CurvePoint;
use crate::error::{Error, Result};

/// `mean_t min(r_t·A_t, clip(r_t, 1−ε, 1+ε)·A_t)`, the objective to
/// maximize.
pub fn ppo_clip_loss(ratios: &[f64], advantages: &[f64], epsilon: f64) -> Result<f64> {
    if ratios.len() != advantages.len() {
        return Err(Error::Argument(format!(
            "{} ratios but {} advantages",
            ratios.len(),
            advantages.len()
        )));
    }
    if epsilon <= 0.0 {
        return Err(Error::Argument(format!("epsilon {epsilon} must be positive")));
    }
    if ratios.is_empty() {
        return Ok(0.0);
    }
    let total: f64 = ratios
        .iter()
        .zip(advantages)
        .map(|(&r, &a)| (r * a).min(r.clamp(1.0 - epsilon, 1.0 + epsilon) * a))
        .sum();
    Ok(total / ratios.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PpoConfig {
    pub total_steps: usize,
    pub rollout_steps: usize,
    pub epochs: usize,
    pub minibatch: usize,
    pub lr: f64,
    pub clip_epsilon: f64,
    pub gamma: f64,
    pub gae_lambda: f64,
    pub value_coef: f64,
    pub entropy_coef: f64,
    pub max_episode_steps: usize,
    pub hidden: [usize; 2],
    pub head: PolicyHead,
}

impl Default for PpoConfig {
    fn default() -> Self {
        Self {
            total_steps: 20_000,
            rollout_steps: 512,
            epochs: 4,
            minibatch: 64,
            lr: 3e-4,
            clip_epsilon: 0.2,
            gamma: 0.99,
            gae_lambda: 0.95,
            value_coef: 0.5,
            entropy_coef: 0.01,
            max_episode_steps: 1000,
            hidden: [256, 32],
            head: PolicyHead::Classical,
        }
    }
}

impl PpoConfig {
    fn check(&self) -> Result<()> {
        let ok = self.total_steps > 0
            && self.rollout_steps > 0
            && self.epochs > 0
            && self.minibatch > 0
            && self.lr > 0.0
            && self.clip_epsilon > 0.0
            && (0.0..=1.0).contains(&self.gamma)
            && (0.0..=1.0).contains(&self.gae_lambda)
            && self.max_episode_steps > 0;
        if ok {
            Ok(())
        } else {
            Err(Error::Argument(format!("unusable PPO configuration {self:?}")))
        }
    }
}

pub(crate) fn sample(probs: &[f64], rng: &mut impl Rng) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut last = 0;
    for (i, &p) in probs.iter().enumerate() {
        if p > 0.0 {
            acc += p;
            last = i;
            if u < acc {
                return i;
            }
        }
    }
    last
}

struct Transition {
    obs: Vec<f64>,
    mask: Vec<bool>,
    action: usize,
    logp: f64,
    value: f64,
    reward: f64,
    cut: bool,
}

/// Trains a policy on episodes drawn round-robin from `envs`. Returns the
/// network and the mean reward of the episodes finished in each rollout.
pub fn train_ppo<E: Environment>(envs: &[E], config: &PpoConfig, seed: u64) -> Result<(Net, Vec<CurvePoint>)> {
    config.check()?;
    // finished start states have no valid action to learn from
    let envs: Vec<&E> = envs.iter().filter(|e| !e.is_done()).collect();
    let first = envs
        .first()
        .ok_or_else(|| Error::Argument("no training environment has a decision to make".into()))?;
    let mut net_config = NetConfig::new(first.obs_dim(), first.n_actions(), config.head);
    net_config.hidden = config.hidden;
    net_config.value_scale = envs
        .iter()
        .map(|e| e.max_remaining_reward())
        .fold(1.0, f64::max);
    let scale = net_config.value_scale;
    let mut net = Net::new(net_config, seed)?;
    let mut adam = Adam::new(net.n_params(), config.lr);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);

    let mut curve = Vec::new();
    let mut episode = 0usize;
    let mut env = envs[0].clone();
    let mut ep_reward = 0.0;
    let mut ep_steps = 0usize;
    let mut steps = 0usize;

    while steps < config.total_steps {
        let mut batch: Vec<Transition> = Vec::with_capacity(config.rollout_steps);
        let mut finished = Vec::new();
        for _ in 0..config.rollout_steps {
            let obs = env.observation();
            let mask = env.action_mask();
            let fwd = net.forward(&obs)?;
            let probs = masked_softmax(&fwd.logits, &mask);
            let action = sample(&probs, &mut rng);
            let (reward, done) = env.step(action)?;
            ep_reward += reward;
            ep_steps += 1;
            steps += 1;
            let cut = done || ep_steps >= config.max_episode_steps;
            batch.push(Transition {
                obs,
                mask,
                action,
                logp: probs[action].ln(),
                value: fwd.value,
                reward,
                cut,
            });
            if cut {
                finished.push(ep_reward);
                episode += 1;
                env = envs[episode % envs.len()].clone();
                ep_reward = 0.0;
                ep_steps = 0;
            }
        }

        let bootstrap = if batch.last().is_some_and(|t| !t.cut) {
            net.forward(&env.observation())?.value
        } else {
            0.0
        };
        let n = batch.len();
        let mut adv = vec![0.0; n];
        let mut gae = 0.0;
        for t in (0..n).rev() {
            let next_value = if t + 1 < n { batch[t + 1].value } else { bootstrap };
            let live = if batch[t].cut { 0.0 } else { 1.0 };
            let delta = batch[t].reward + config.gamma * next_value * live - batch[t].value;
            gae = delta + config.gamma * config.gae_lambda * live * gae;
            adv[t] = gae;
        }
        let returns: Vec<f64> = (0..n).map(|t| adv[t] + batch[t].value).collect();
        let mean = adv.iter().sum::<f64>() / n as f64;
        let std = (adv.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / n as f64).sqrt();
        for a in &mut adv {
            *a = (*a - mean) / (std + 1e-8);
        }

        let mut order: Vec<usize> = (0..n).collect();
        for _ in 0..config.epochs {
            order.shuffle(&mut rng);
            for mb in order.chunks(config.minibatch) {
                let mut grad = vec![0.0; net.n_params()];
                let mut loss = 0.0;
                let m = mb.len() as f64;
                for &i in mb {
                    let t = &batch[i];
                    let fwd = net.forward(&t.obs)?;
                    let probs = masked_softmax(&fwd.logits, &t.mask);
                    let logp = probs[t.action].ln();
                    let ratio = (logp - t.logp).exp();
                    let a = adv[i];
                    let clipped = ratio.clamp(1.0 - config.clip_epsilon, 1.0 + config.clip_epsilon);
                    loss -= (ratio * a).min(clipped * a) / m;
                    // the gradient flows only through the unclipped branch
                    let active = ratio * a <= clipped * a;
                    let dlogp = if active { -ratio * a / m } else { 0.0 };
                    let entropy: f64 = -probs.iter().filter(|&&p| p > 0.0).map(|p| p * p.ln()).sum::<f64>();
                    loss -= config.entropy_coef * entropy / m;
                    let mut dlogits = vec![0.0; probs.len()];
                    for (j, &p) in probs.iter().enumerate() {
                        if p == 0.0 {
                            continue;
                        }
                        let onehot = if j == t.action { 1.0 } else { 0.0 };
                        dlogits[j] = dlogp * (onehot - p) + config.entropy_coef / m * p * (p.ln() + entropy);
                    }
                    let err = (fwd.value - returns[i]) / scale;
                    loss += config.value_coef * err * err / m;
                    let dvalue = 2.0 * config.value_coef * err / scale / m;
                    net.backward(&t.obs, &fwd, &dlogits, dvalue, &mut grad)?;
                }
                if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
                    return Err(Error::Divergence(format!(
                        "non-finite PPO loss {loss} after {steps} steps"
                    )));
                }
                adam.step(&mut net.params, &grad);
            }
        }
        if !finished.is_empty() {
            curve.push(CurvePoint {
                step: steps,
                mean_reward: finished.iter().sum::<f64>() / finished.len() as f64,
            });
        }
    }
    Ok((net, curve))
}

/// Mean episode reward of the uniformly random policy over valid actions.
pub fn random_policy_reward<E: Environment>(envs: &[E], episodes: usize, max_steps: usize, seed: u64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut total = 0.0;
    for ep in 0..episodes {
        let mut env = envs[ep % envs.len()].clone();
        let mut steps = 0;
        while !env.is_done() && steps < max_steps {
            let valid: Vec<usize> = env
                .action_mask()
                .iter()
                .enumerate()
                .filter(|(_, &m)| m)
                .map(|(a, _)| a)
                .collect();
            let a = valid[rng.random_range(0..valid.len())];
            total += env.step(a)?.0;
            steps += 1;
        }
    }
    Ok(total / episodes.max(1) as f64)
}

/// Mean episode reward when always taking the most probable valid action.
pub fn greedy_policy_reward<E: Environment>(net: &Net, envs: &[E], max_steps: usize) -> Result<f64> {
    let mut total = 0.0;
    for e in envs {
        let mut env = e.clone();
        let mut steps = 0;
        while !env.is_done() && steps < max_steps {
            let a = argmax_action(net, &env)?;
            total += env.step(a)?.0;
            steps += 1;
        }
    }
    Ok(total / envs.len().max(1) as f64)
}

/// Most probable valid action; ties go to the lowest index.
pub fn argmax_action<E: Environment>(net: &Net, env: &E) -> Result<usize> {
    let fwd = net.forward(&env.observation())?;
    let probs = masked_softmax(&fwd.logits, &env.action_mask());
    Ok(probs
        .iter()
        .enumerate()
        .fold((0, -1.0), |best, (i, &p)| if p > best.1 { (i, p) } else { best })
        .0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clip_cases() {
        assert_eq!(ppo_clip_loss(&[1.0], &[2.0], 0.2).unwrap(), 2.0);
        assert_eq!(ppo_clip_loss(&[1.5], &[1.0], 0.2).unwrap(), 1.2);
        assert_eq!(ppo_clip_loss(&[0.5], &[-1.0], 0.2).unwrap(), -0.8);
        assert!(ppo_clip_loss(&[1.0], &[], 0.2).is_err());
        assert!(ppo_clip_loss(&[1.0], &[1.0], 0.0).is_err());
    }

    #[test]
    fn sample_respects_zero_probabilities() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            assert_ne!(sample(&[0.5, 0.0, 0.5], &mut rng), 1);
        }
    }
}
