//! Compilation of an [`IlpModel`] to a QUBO, and a simulated annealer.
//!
//! The energy is `Q0 + β·C`, where `Q0` is the negated objective and `C`
//! collects one squared penalty per constraint row:
//!
//! * `≤ 1` rows with unit coefficients use `(Σ x − 1/2)²`, which is `1/4`
//!   for sums 0 and 1 and at least `9/4` otherwise,
//! * equality rows use `(Σ a·x − b)²`,
//! * other inequalities get binary slack bits, `(Σ a·x + Σ 2^i z_i − b)²`.
//!
//! Feasible assignments therefore sit on a floor of `1/4` per half-square
//! row rather than at zero.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::ilp::{IlpModel, Row, Sense};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PenaltyKind {
    HalfSquare,
    Square,
    /// Slack bits `slack_start .. slack_start + width`.
    Slack { slack_start: usize, width: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct PenaltyBlock {
    pub tag: String,
    /// Index of the source row in the ILP model.
    pub row: usize,
    pub kind: PenaltyKind,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct QuboModel {
    pub names: Vec<String>,
    /// Leading variables that mirror the ILP bits; the rest are slack.
    pub n_original: usize,
    /// Upper-triangular coefficients, `i <= j`.
    pub coefficients: BTreeMap<(usize, usize), f64>,
    pub offset: f64,
    pub beta: f64,
    pub blocks: Vec<PenaltyBlock>,
    /// Rows dropped because no assignment can violate them.
    pub redundant_rows: Vec<usize>,
    /// Rows no assignment can satisfy.
    pub infeasible_rows: Vec<usize>,
    penalty: BTreeMap<(usize, usize), f64>,
    penalty_offset: f64,
}

impl QuboModel {
    pub fn n_vars(&self) -> usize {
        self.names.len()
    }

    /// Value of the penalty block `C` on its feasible floor.
    pub fn penalty_floor(&self) -> f64 {
        0.25 * self
            .blocks
            .iter()
            .filter(|b| b.kind == PenaltyKind::HalfSquare)
            .count() as f64
    }

    /// `C(bits)`, without the factor `β`.
    pub fn penalty(&self, bits: &[u8]) -> f64 {
        quadratic(&self.penalty, bits) + self.penalty_offset
    }

    /// True when every penalty sits on its floor.
    pub fn is_feasible(&self, bits: &[u8]) -> bool {
        self.penalty(bits) <= self.penalty_floor() + 1e-9
    }

    /// The ILP part of a QUBO bit vector.
    pub fn decode<'a>(&self, bits: &'a [u8]) -> &'a [u8] {
        &bits[..self.n_original]
    }

    /// Completes ILP bits with the best slack value for every row.
    pub fn with_best_slack(&self, model: &IlpModel, original: &[u8]) -> Vec<u8> {
        let mut bits = original.to_vec();
        bits.resize(self.n_vars(), 0);
        for b in &self.blocks {
            if let PenaltyKind::Slack { slack_start, width } = b.kind {
                let (terms, rhs) = as_le(&model.rows[b.row]);
                let act: i64 = terms.iter().map(|&(v, c)| c * original[v] as i64).sum();
                let s = (rhs - act).clamp(0, (1i64 << width) - 1);
                for i in 0..width {
                    bits[slack_start + i] = ((s >> i) & 1) as u8;
                }
            }
        }
        bits
    }

    /// Coordinate-list text: a header with offset and β, then `i j coef`.
    pub fn export(&self) -> String {
        let mut s = format!(
            "# qubo n={} offset={} beta={}\n",
            self.n_vars(),
            self.offset,
            self.beta
        );
        for (&(i, j), &c) in &self.coefficients {
            if c != 0.0 {
                let _ = writeln!(s, "{i} {j} {c}");
            }
        }
        s
    }
}

fn quadratic(q: &BTreeMap<(usize, usize), f64>, bits: &[u8]) -> f64 {
    q.iter()
        .filter(|(&(i, j), _)| bits[i] == 1 && bits[j] == 1)
        .map(|(_, &c)| c)
        .sum()
}

/// `β = Σ J_f + 1`.
pub fn choose_beta(model: &IlpModel) -> f64 {
    model.weights.iter().sum::<u64>() as f64 + 1.0
}

/// Row rewritten as `Σ a·x ≤ b` (or `=` for equalities).
fn as_le(row: &Row) -> (Vec<(usize, i64)>, i64) {
    match row.sense {
        Sense::Ge => (row.terms.iter().map(|&(v, c)| (v, -c)).collect(), -row.rhs),
        Sense::Le | Sense::Eq => (row.terms.clone(), row.rhs),
    }
}

/// Adds `(Σ a_i b_i − c)²` to `q`, returning the constant `c²`.
fn add_square(q: &mut BTreeMap<(usize, usize), f64>, terms: &[(usize, f64)], c: f64) -> f64 {
    for (k, &(i, a)) in terms.iter().enumerate() {
        *q.entry((i, i)).or_default() += a * a - 2.0 * c * a;
        for &(j, b) in &terms[k + 1..] {
            let key = if i <= j { (i, j) } else { (j, i) };
            *q.entry(key).or_default() += 2.0 * a * b;
        }
    }
    c * c
}

pub fn to_qubo(model: &IlpModel) -> QuboModel {
    let beta = choose_beta(model);
    let mut names: Vec<String> = model.vars.iter().map(|v| v.to_string()).collect();
    let n_original = names.len();
    let mut penalty = BTreeMap::new();
    let mut penalty_offset = 0.0;
    let mut blocks = Vec::new();
    let mut redundant_rows = Vec::new();
    let mut infeasible_rows = Vec::new();

    for (r, row) in model.rows.iter().enumerate() {
        let (terms, rhs) = as_le(row);
        let lo: i64 = terms.iter().map(|&(_, c)| c.min(0)).sum();
        let hi: i64 = terms.iter().map(|&(_, c)| c.max(0)).sum();
        let equality = row.sense == Sense::Eq;
        if lo > rhs || (equality && hi < rhs) {
            infeasible_rows.push(r);
        }
        if !equality && hi <= rhs {
            redundant_rows.push(r);
            continue;
        }
        let float_terms: Vec<(usize, f64)> = terms.iter().map(|&(v, c)| (v, c as f64)).collect();
        let kind = if equality {
            penalty_offset += add_square(&mut penalty, &float_terms, rhs as f64);
            PenaltyKind::Square
        } else if rhs == 1 && terms.iter().all(|&(_, c)| c == 1) {
            penalty_offset += add_square(&mut penalty, &float_terms, 0.5);
            PenaltyKind::HalfSquare
        } else {
            let max_slack = (rhs - lo).max(0);
            let width = (64 - (max_slack as u64).leading_zeros()) as usize;
            let slack_start = names.len();
            let mut all = float_terms;
            for i in 0..width {
                names.push(format!("z_{r}_{i}"));
                all.push((slack_start + i, (1u64 << i) as f64));
            }
            penalty_offset += add_square(&mut penalty, &all, rhs as f64);
            PenaltyKind::Slack { slack_start, width }
        };
        blocks.push(PenaltyBlock {
            tag: row.tag.clone(),
            row: r,
            kind,
        });
    }

    let mut coefficients: BTreeMap<(usize, usize), f64> =
        penalty.iter().map(|(&k, &c)| (k, beta * c)).collect();
    for (v, &c) in model.objective.iter().enumerate() {
        if c != 0.0 {
            *coefficients.entry((v, v)).or_default() -= c;
        }
    }
    coefficients.retain(|_, c| *c != 0.0);
    penalty.retain(|_, c| *c != 0.0);

    QuboModel {
        names,
        n_original,
        coefficients,
        offset: beta * penalty_offset,
        beta,
        blocks,
        redundant_rows,
        infeasible_rows,
        penalty,
        penalty_offset,
    }
}

/// `bitsᵀ·Q·bits + offset`.
pub fn qubo_energy(qubo: &QuboModel, bits: &[u8]) -> Result<f64> {
    if bits.len() != qubo.n_vars() {
        return Err(Error::Argument(format!(
            "{} bits for a {}-variable QUBO",
            bits.len(),
            qubo.n_vars()
        )));
    }
    Ok(quadratic(&qubo.coefficients, bits) + qubo.offset)
}

/// Single-flip Metropolis annealing from the all-zero state with a
/// geometric temperature schedule, one temperature per sweep. Returns the
/// best state seen.
pub fn anneal(qubo: &QuboModel, sweeps: usize, t_start: f64, t_end: f64, seed: u64) -> Result<(Vec<u8>, f64)> {
    if sweeps == 0 || !(t_start >= t_end && t_end > 0.0) {
        return Err(Error::Argument(format!(
            "need sweeps >= 1 and t_start >= t_end > 0, got {sweeps}, {t_start}, {t_end}"
        )));
    }
    let n = qubo.n_vars();
    let mut diag = vec![0.0; n];
    let mut adj: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for (&(i, j), &c) in &qubo.coefficients {
        if i == j {
            diag[i] += c;
        } else {
            adj[i].push((j, c));
            adj[j].push((i, c));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut bits = vec![0u8; n];
    let mut field = vec![0.0; n];
    let mut energy = qubo.offset;
    let mut best = (bits.clone(), energy);
    let ratio = if sweeps > 1 {
        (t_end / t_start).powf(1.0 / (sweeps - 1) as f64)
    } else {
        1.0
    };
    let mut t = t_start;
    for _ in 0..sweeps {
        for i in 0..n {
            let delta = if bits[i] == 0 {
                diag[i] + field[i]
            } else {
                -(diag[i] + field[i])
            };
            if delta <= 0.0 || rng.random::<f64>() < (-delta / t).exp() {
                let sign = if bits[i] == 0 { 1.0 } else { -1.0 };
                bits[i] ^= 1;
                energy += delta;
                for &(j, c) in &adj[i] {
                    field[j] += sign * c;
                }
                if energy < best.1 - 1e-12 {
                    best = (bits.clone(), energy);
                }
            }
        }
        t *= ratio;
    }
    // report the exact energy, free of accumulated rounding
    let e = qubo_energy(qubo, &best.0)?;
    Ok((best.0, e))
}
