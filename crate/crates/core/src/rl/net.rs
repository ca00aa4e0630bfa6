//! Policy/value network with hand-written backpropagation.
//!
//! The encoder is two tanh layers. The value head is one sigmoid neuron
//! scaled to the reward range. The policy head is either a linear layer
//! (classical) or the 4-qubit circuit fed with `π·h` followed by an affine
//! map from its two outputs to the action logits (hybrid).

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quantum::{feature_shift_grad, param_shift_grad, simulate, PqcSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PolicyHead {
    Classical,
    Hybrid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetConfig {
    pub obs_dim: usize,
    pub n_actions: usize,
    pub hidden: [usize; 2],
    pub head: PolicyHead,
    /// The value head outputs `value_scale · sigmoid(·)`.
    pub value_scale: f64,
}

impl NetConfig {
    pub fn new(obs_dim: usize, n_actions: usize, head: PolicyHead) -> Self {
        Self {
            obs_dim,
            n_actions,
            hidden: [256, 32],
            head,
            value_scale: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Span {
    start: usize,
    len: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct Layout {
    w1: Span,
    b1: Span,
    w2: Span,
    b2: Span,
    wv: Span,
    bv: Span,
    wp: Span,
    bp: Span,
    pqc: Span,
    total: usize,
}

impl Layout {
    fn new(c: &NetConfig, pqc_params: usize) -> Self {
        let mut at = 0;
        let mut span = |len: usize| {
            let s = Span { start: at, len };
            at += len;
            s
        };
        let [h1, h2] = c.hidden;
        let policy_in = match c.head {
            PolicyHead::Classical => h2,
            PolicyHead::Hybrid => 2,
        };
        let w1 = span(h1 * c.obs_dim);
        let b1 = span(h1);
        let w2 = span(h2 * h1);
        let b2 = span(h2);
        let wv = span(h2);
        let bv = span(1);
        let wp = span(c.n_actions * policy_in);
        let bp = span(c.n_actions);
        let pqc = span(pqc_params);
        Self {
            w1,
            b1,
            w2,
            b2,
            wv,
            bv,
            wp,
            bp,
            pqc,
            total: at,
        }
    }

    /// Named parameter groups, for checkpoints.
    fn groups(&self) -> [(&'static str, Span); 9] {
        [
            ("encoder.0.weight", self.w1),
            ("encoder.0.bias", self.b1),
            ("encoder.1.weight", self.w2),
            ("encoder.1.bias", self.b2),
            ("value.weight", self.wv),
            ("value.bias", self.bv),
            ("policy.weight", self.wp),
            ("policy.bias", self.bp),
            ("circuit.theta", self.pqc),
        ]
    }
}

/// Activations kept for the backward pass.
#[derive(Debug, Clone)]
pub struct Forward {
    pub h1: Vec<f64>,
    pub h2: Vec<f64>,
    /// Circuit outputs (hybrid head only).
    pub z: Vec<f64>,
    pub logits: Vec<f64>,
    sig: f64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Net {
    pub config: NetConfig,
    pub params: Vec<f64>,
    layout: Layout,
    spec: PqcSpec,
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

impl Net {
    /// Glorot-uniform weights, zero biases, circuit angles uniform in
    /// `(−π, π)`.
    pub fn new(config: NetConfig, seed: u64) -> Result<Self> {
        let spec = PqcSpec::default();
        if config.head == PolicyHead::Hybrid && config.hidden[1] != spec.n_features() {
            return Err(Error::Argument(format!(
                "hybrid head needs {} encoder outputs, got {}",
                spec.n_features(),
                config.hidden[1]
            )));
        }
        if config.obs_dim == 0 || config.n_actions == 0 || config.hidden.contains(&0) {
            return Err(Error::Argument("network dimensions must be positive".into()));
        }
        let pqc_params = match config.head {
            PolicyHead::Classical => 0,
            PolicyHead::Hybrid => spec.n_params(),
        };
        let layout = Layout::new(&config, pqc_params);
        let mut params = vec![0.0; layout.total];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let [h1, h2] = config.hidden;
        let policy_in = if config.head == PolicyHead::Hybrid { 2 } else { h2 };
        for (span, fan_in, fan_out) in [
            (layout.w1, config.obs_dim, h1),
            (layout.w2, h1, h2),
            (layout.wv, h2, 1),
            (layout.wp, policy_in, config.n_actions),
        ] {
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            for p in &mut params[span.start..span.start + span.len] {
                *p = rng.random_range(-limit..limit);
            }
        }
        for p in &mut params[layout.pqc.start..layout.pqc.start + layout.pqc.len] {
            *p = rng.random_range(-PI..PI);
        }
        Ok(Self {
            config,
            params,
            layout,
            spec,
        })
    }

    /// Rebuilds a network around an existing parameter vector.
    pub fn from_params(config: NetConfig, params: Vec<f64>) -> Result<Self> {
        let mut net = Self::new(config, 0)?;
        if params.len() != net.params.len() {
            return Err(Error::Argument(format!(
                "expected {} parameters, got {}",
                net.params.len(),
                params.len()
            )));
        }
        net.params = params;
        Ok(net)
    }

    pub fn n_params(&self) -> usize {
        self.params.len()
    }

    /// `(name, values)` for every parameter group.
    pub fn named_groups(&self) -> Vec<(&'static str, &[f64])> {
        self.layout
            .groups()
            .into_iter()
            .map(|(name, s)| (name, &self.params[s.start..s.start + s.len]))
            .collect()
    }

    fn slice(&self, s: Span) -> &[f64] {
        &self.params[s.start..s.start + s.len]
    }

    pub fn forward(&self, obs: &[f64]) -> Result<Forward> {
        let c = &self.config;
        if obs.len() != c.obs_dim {
            return Err(Error::Argument(format!(
                "observation has {} entries, network takes {}",
                obs.len(),
                c.obs_dim
            )));
        }
        let [n1, n2] = c.hidden;
        let h1 = dense(self.slice(self.layout.w1), self.slice(self.layout.b1), obs, n1, true);
        let h2 = dense(self.slice(self.layout.w2), self.slice(self.layout.b2), &h1, n2, true);
        let o = dense(self.slice(self.layout.wv), self.slice(self.layout.bv), &h2, 1, false)[0];
        let sig = sigmoid(o);
        let (z, logits) = match c.head {
            PolicyHead::Classical => (
                Vec::new(),
                dense(self.slice(self.layout.wp), self.slice(self.layout.bp), &h2, c.n_actions, false),
            ),
            PolicyHead::Hybrid => {
                let features: Vec<f64> = h2.iter().map(|h| PI * h).collect();
                let z = simulate(&self.spec, self.slice(self.layout.pqc), &features)?;
                let logits = dense(self.slice(self.layout.wp), self.slice(self.layout.bp), &z, c.n_actions, false);
                (z, logits)
            }
        };
        Ok(Forward {
            h1,
            h2,
            z,
            logits,
            sig,
            value: c.value_scale * sig,
        })
    }

    /// Accumulates into `grad` the gradient of a loss whose derivatives with
    /// respect to the logits and the value are given.
    pub fn backward(
        &self,
        obs: &[f64],
        fwd: &Forward,
        dlogits: &[f64],
        dvalue: f64,
        grad: &mut [f64],
    ) -> Result<()> {
        let c = &self.config;
        let l = &self.layout;
        let [n1, n2] = c.hidden;
        let mut dh2 = vec![0.0; n2];

        let dov = dvalue * c.value_scale * fwd.sig * (1.0 - fwd.sig);
        if dov != 0.0 {
            grad[l.bv.start] += dov;
            for j in 0..n2 {
                grad[l.wv.start + j] += dov * fwd.h2[j];
                dh2[j] += dov * self.params[l.wv.start + j];
            }
        }

        let policy_active = dlogits.iter().any(|&g| g != 0.0);
        if policy_active {
            let input: &[f64] = match c.head {
                PolicyHead::Classical => &fwd.h2,
                PolicyHead::Hybrid => &fwd.z,
            };
            let k = input.len();
            let mut dinput = vec![0.0; k];
            for (a, &g) in dlogits.iter().enumerate() {
                if g == 0.0 {
                    continue;
                }
                grad[l.bp.start + a] += g;
                let row = l.wp.start + a * k;
                for j in 0..k {
                    grad[row + j] += g * input[j];
                    dinput[j] += g * self.params[row + j];
                }
            }
            match c.head {
                PolicyHead::Classical => {
                    for j in 0..n2 {
                        dh2[j] += dinput[j];
                    }
                }
                PolicyHead::Hybrid => {
                    let theta = self.slice(l.pqc);
                    let features: Vec<f64> = fwd.h2.iter().map(|h| PI * h).collect();
                    let gp = param_shift_grad(&self.spec, theta, &features)?;
                    for (j, row) in gp.iter().enumerate() {
                        grad[l.pqc.start + j] += row.iter().zip(&dinput).map(|(a, b)| a * b).sum::<f64>();
                    }
                    let gf = feature_shift_grad(&self.spec, theta, &features)?;
                    for (j, row) in gf.iter().enumerate() {
                        dh2[j] += PI * row.iter().zip(&dinput).map(|(a, b)| a * b).sum::<f64>();
                    }
                }
            }
        }

        // encoder
        let dpre2: Vec<f64> = (0..n2).map(|j| dh2[j] * (1.0 - fwd.h2[j] * fwd.h2[j])).collect();
        let mut dh1 = vec![0.0; n1];
        for j in 0..n2 {
            let g = dpre2[j];
            if g == 0.0 {
                continue;
            }
            grad[l.b2.start + j] += g;
            let row = l.w2.start + j * n1;
            for i in 0..n1 {
                grad[row + i] += g * fwd.h1[i];
                dh1[i] += g * self.params[row + i];
            }
        }
        let nonzero: Vec<(usize, f64)> = obs.iter().copied().enumerate().filter(|(_, x)| *x != 0.0).collect();
        let sparse = nonzero.len() * 4 < obs.len();
        for i in 0..n1 {
            let g = dh1[i] * (1.0 - fwd.h1[i] * fwd.h1[i]);
            if g == 0.0 {
                continue;
            }
            grad[l.b1.start + i] += g;
            let row = &mut grad[l.w1.start + i * c.obs_dim..l.w1.start + (i + 1) * c.obs_dim];
            if sparse {
                for &(k, x) in &nonzero {
                    row[k] += g * x;
                }
            } else {
                for (gk, x) in row.iter_mut().zip(obs) {
                    *gk += g * x;
                }
            }
        }
        Ok(())
    }
}

/// `act(W·x + b)` with row-major `W`.
fn dense(w: &[f64], b: &[f64], x: &[f64], n_out: usize, tanh: bool) -> Vec<f64> {
    let n_in = x.len();
    // observations of small instances are mostly empty slots
    let nonzero: Vec<(usize, f64)> = x.iter().copied().enumerate().filter(|(_, v)| *v != 0.0).collect();
    let sparse = nonzero.len() * 4 < n_in;
    (0..n_out)
        .map(|o| {
            let row = &w[o * n_in..(o + 1) * n_in];
            let s = b[o]
                + if sparse {
                    nonzero.iter().map(|&(i, v)| row[i] * v).sum::<f64>()
                } else {
                    dot(row, x)
                };
            if tanh {
                s.tanh()
            } else {
                s
            }
        })
        .collect()
}

/// Eight running sums so the compiler can vectorize the loop.
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0f64; 8];
    let (ca, cb) = (a.chunks_exact(8), b.chunks_exact(8));
    let tail: f64 = ca.remainder().iter().zip(cb.remainder()).map(|(x, y)| x * y).sum();
    for (u, v) in ca.zip(cb) {
        for k in 0..8 {
            acc[k] += u[k] * v[k];
        }
    }
    acc.iter().sum::<f64>() + tail
}

/// Softmax restricted to `mask`; masked entries get probability 0.
pub fn masked_softmax(logits: &[f64], mask: &[bool]) -> Vec<f64> {
    let max = logits
        .iter()
        .zip(mask)
        .filter(|(_, &m)| m)
        .map(|(l, _)| *l)
        .fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return vec![0.0; logits.len()];
    }
    let exps: Vec<f64> = logits
        .iter()
        .zip(mask)
        .map(|(l, &m)| if m { (l - max).exp() } else { 0.0 })
        .collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

/// Adam with the usual bias correction.
#[derive(Debug, Clone, PartialEq)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    pub fn new(n: usize, lr: f64) -> Self {
        Self {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
        }
    }

    pub fn step(&mut self, params: &mut [f64], grad: &[f64]) {
        self.t += 1;
        let c1 = 1.0 - self.beta1.powi(self.t);
        let c2 = 1.0 - self.beta2.powi(self.t);
        for i in 0..params.len() {
            let g = grad[i];
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * g;
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * g * g;
            params[i] -= self.lr * (self.m[i] / c1) / ((self.v[i] / c2).sqrt() + self.eps);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hybrid_requires_32_features() {
        let mut c = NetConfig::new(10, 3, PolicyHead::Hybrid);
        c.hidden = [8, 16];
        assert!(Net::new(c, 0).is_err());
    }

    #[test]
    fn masked_softmax_zeroes_masked() {
        let p = masked_softmax(&[1.0, 5.0, 2.0], &[true, false, true]);
        assert_eq!(p[1], 0.0);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(p[2] > p[0]);
    }

    #[test]
    fn classical_gradient_matches_finite_differences() {
        let mut c = NetConfig::new(6, 3, PolicyHead::Classical);
        c.hidden = [5, 4];
        c.value_scale = 2.0;
        let net = Net::new(c, 9).unwrap();
        let obs = [0.3, -0.2, 0.0, 0.9, 0.1, -0.5];
        let loss = |n: &Net| {
            let f = n.forward(&obs).unwrap();
            f.logits[0] * 0.7 - f.logits[2] * 0.4 + (f.value - 1.0).powi(2)
        };
        let f = net.forward(&obs).unwrap();
        let mut g = vec![0.0; net.n_params()];
        net.backward(&obs, &f, &[0.7, 0.0, -0.4], 2.0 * (f.value - 1.0), &mut g).unwrap();
        for i in 0..net.n_params() {
            let mut p = net.clone();
            p.params[i] += 1e-6;
            let up = loss(&p);
            p.params[i] -= 2e-6;
            let down = loss(&p);
            let fd = (up - down) / 2e-6;
            assert!((fd - g[i]).abs() < 1e-6, "param {i}: {fd} vs {}", g[i]);
        }
    }
}
