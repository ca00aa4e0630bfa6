//! Exhaustive reference solver.

use super::{Assignment, IlpModel};
use crate::error::{Error, Result};

/// Largest cluster the oracle accepts.
pub const ORACLE_MAX_REQUESTS: usize = 8;

/// Enumerates every completion sequence directly: the first request starts
/// at its earliest candidate and each successor at the candidate the
/// transition table assigns. No constraint row is consulted.
pub fn brute_force_oracle(model: &IlpModel) -> Result<Assignment> {
    let n = model.n_requests();
    if n > ORACLE_MAX_REQUESTS {
        return Err(Error::Refused(format!(
            "{n} requests exceed the oracle limit of {ORACLE_MAX_REQUESTS}"
        )));
    }
    let mut best_bits = model.encode(&[]);
    let mut best = model.evaluate(&best_bits);
    let mut seq: Vec<(usize, usize)> = Vec::with_capacity(n);
    let mut used = vec![false; n];
    let mut nodes = 0u64;
    extend(model, &mut seq, &mut used, &mut best, &mut best_bits, &mut nodes);
    Ok(Assignment {
        bits: best_bits,
        objective: best,
        proven: true,
        nodes,
    })
}

fn extend(
    model: &IlpModel,
    seq: &mut Vec<(usize, usize)>,
    used: &mut [bool],
    best: &mut f64,
    best_bits: &mut Vec<u8>,
    nodes: &mut u64,
) {
    *nodes += 1;
    if !seq.is_empty() {
        let bits = model.encode(seq);
        let obj = model.evaluate(&bits);
        if obj > *best {
            *best = obj;
            *best_bits = bits;
        }
    }
    for f in 0..used.len() {
        if used[f] {
            continue;
        }
        let alpha = match seq.last() {
            None => Some(0),
            Some(&(p, a)) => model.transitions.successor(p, f, a),
        };
        if let Some(alpha) = alpha {
            used[f] = true;
            seq.push((f, alpha));
            extend(model, seq, used, best, best_bits, nodes);
            seq.pop();
            used[f] = false;
        }
    }
}
