//! Exact integer model of one cluster.
//!
//! Each request `f` may occupy one queue slot `q` (`x[f][q]`), starts at one
//! discretized instant `α` (`y[f][α]`), and may be followed directly by one
//! other request (`κ[f1][f2]`). The objective rewards completed requests by
//! priority weight and slightly penalizes late starts:
//!
//! ```text
//! maximize  Σ_f ( J_f Σ_q x[f][q] − Σ_α γ[f][α] y[f][α] )
//! ```
//!
//! Every constraint row carries the name of its family (`one_successor`,
//! `successor_start`, ...), which the QUBO compiler and the dump format reuse.

mod bb;
mod oracle;

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{
    end_attitude, maneuver_duration, min_relay_time, start_attitude, Attitude, Ephemeris,
};
use crate::model::{AcquisitionRequest, ChainedAcquisition};

pub use bb::solve_bb;
pub use oracle::{brute_force_oracle, ORACLE_MAX_REQUESTS};

/// Default grid step in seconds.
pub const DEFAULT_STEP_S: i64 = 5;

/// One candidate start instant of a request.
#[derive(Debug, Clone, PartialEq)]
pub struct GridPoint {
    pub start_ms: i64,
    pub start_attitude: Attitude,
    pub end_attitude: Attitude,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridRequest {
    pub request: AcquisitionRequest,
    /// Earliest start after trimming; equals the DTO start when untrimmed.
    pub window_start_ms: i64,
    pub candidates: Vec<GridPoint>,
}

impl GridRequest {
    /// Latest start that still ends inside the DTO.
    pub fn last_start_ms(&self) -> i64 {
        self.request.dto_end_ms - self.request.acquisition_duration_ms()
    }
}

/// Candidate start times per request, in increasing order.
#[derive(Debug, Clone, PartialEq)]
pub struct AngleGrid {
    pub step_s: i64,
    pub requests: Vec<GridRequest>,
    /// Requests whose (trimmed) window cannot hold the acquisition.
    pub excluded: Vec<String>,
}

/// Grid over the untrimmed DTO windows.
pub fn build_angle_grid(
    requests: &[&AcquisitionRequest],
    ephemeris: &Ephemeris,
    step_s: i64,
) -> Result<AngleGrid> {
    let starts: Vec<(&AcquisitionRequest, i64)> =
        requests.iter().map(|r| (*r, r.dto_start_ms)).collect();
    build_trimmed_grid(&starts, ephemeris, step_s)
}

/// Grid where each request's window begins at the paired earliest start.
pub fn build_trimmed_grid(
    requests: &[(&AcquisitionRequest, i64)],
    ephemeris: &Ephemeris,
    step_s: i64,
) -> Result<AngleGrid> {
    if step_s < 1 {
        return Err(Error::Argument(format!("step_s = {step_s} must be at least 1")));
    }
    let mut grid = AngleGrid {
        step_s,
        requests: Vec::new(),
        excluded: Vec::new(),
    };
    for &(req, earliest) in requests {
        let tau = req.acquisition_duration_ms();
        let lo = earliest.max(req.dto_start_ms);
        let hi = req.dto_end_ms - tau;
        let mut candidates = Vec::new();
        let mut b = lo;
        while b <= hi {
            if let (Ok(sa), Ok(ea)) = (
                start_attitude(req, ephemeris, b),
                end_attitude(req, ephemeris, b + tau),
            ) {
                candidates.push(GridPoint {
                    start_ms: b,
                    start_attitude: sa,
                    end_attitude: ea,
                });
            }
            b += step_s * 1000;
        }
        if candidates.is_empty() {
            grid.excluded.push(req.request_id.clone());
        } else {
            grid.requests.push(GridRequest {
                request: req.clone(),
                window_start_ms: lo,
                candidates,
            });
        }
    }
    Ok(grid)
}

/// Feasible direct successions between requests of a grid.
///
/// For an ordered pair `(f1, f2)` and a start index `α` of `f1`, the map
/// gives the first candidate of `f2` not earlier than the end of `f1` plus
/// the minimum relay time.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TransitionTable {
    maps: BTreeMap<(usize, usize), Vec<Option<usize>>>,
}

impl TransitionTable {
    /// Whether `(f1, f2)` belongs to `L`.
    pub fn contains(&self, f1: usize, f2: usize) -> bool {
        self.maps.contains_key(&(f1, f2))
    }

    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.maps.keys().copied()
    }

    /// `M_{f1,f2}(α)`.
    pub fn successor(&self, f1: usize, f2: usize, alpha: usize) -> Option<usize> {
        self.maps.get(&(f1, f2)).and_then(|m| m[alpha])
    }

    /// Start indices of `f1` from which `f2` can follow.
    pub fn start_domain(&self, f1: usize, f2: usize) -> Vec<usize> {
        self.maps
            .get(&(f1, f2))
            .map(|m| (0..m.len()).filter(|&a| m[a].is_some()).collect())
            .unwrap_or_default()
    }

    /// Start indices of `f2` reached from `f1`.
    pub fn end_image(&self, f1: usize, f2: usize) -> Vec<usize> {
        let mut v: Vec<usize> = self
            .maps
            .get(&(f1, f2))
            .map(|m| m.iter().flatten().copied().collect())
            .unwrap_or_default();
        v.sort_unstable();
        v.dedup();
        v
    }
}

pub fn build_transitions(grid: &AngleGrid, ephemeris: &Ephemeris) -> TransitionTable {
    let mut maps = BTreeMap::new();
    for (i, g1) in grid.requests.iter().enumerate() {
        let tau1 = g1.request.acquisition_duration_ms();
        for (j, g2) in grid.requests.iter().enumerate() {
            if i == j {
                continue;
            }
            let m: Vec<Option<usize>> = g1
                .candidates
                .iter()
                .map(|c| {
                    let end = c.start_ms + tau1;
                    let t_min = min_relay_time(end, &g1.request, &g2.request, ephemeris)?;
                    let arrival = end + t_min * 1000;
                    g2.candidates.iter().position(|c2| c2.start_ms >= arrival)
                })
                .collect();
            if m.iter().any(Option::is_some) {
                maps.insert((i, j), m);
            }
        }
    }
    TransitionTable { maps }
}

/// Priority weights: the lowest present priority weighs 1, and every higher
/// priority weighs one more than all lower-priority requests together.
pub fn priority_weights(priorities: &[u8]) -> Vec<u64> {
    let mut per_level = BTreeMap::new();
    let mut below: u64 = 0;
    for level in (1..=4u8).rev() {
        let count = priorities.iter().filter(|&&p| p == level).count() as u64;
        if count > 0 {
            let w = below + 1;
            per_level.insert(level, w);
            below += w * count;
        }
    }
    priorities.iter().map(|p| per_level[p]).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Var {
    X { f: usize, q: usize },
    Y { f: usize, alpha: usize },
    K { f1: usize, f2: usize },
}

impl fmt::Display for Var {
    fn fmt(&self, out: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Var::X { f, q } => write!(out, "x_{f}_{q}"),
            Var::Y { f, alpha } => write!(out, "y_{f}_{alpha}"),
            Var::K { f1, f2 } => write!(out, "k_{f1}_{f2}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sense {
    Le,
    Eq,
    Ge,
}

/// `Σ coef·var (sense) rhs` with integer coefficients.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Row {
    pub tag: String,
    pub terms: Vec<(usize, i64)>,
    pub sense: Sense,
    pub rhs: i64,
}

impl Row {
    pub fn activity(&self, bits: &[u8]) -> i64 {
        self.terms.iter().map(|&(v, c)| c * bits[v] as i64).sum()
    }

    pub fn satisfied(&self, bits: &[u8]) -> bool {
        let a = self.activity(bits);
        match self.sense {
            Sense::Le => a <= self.rhs,
            Sense::Eq => a == self.rhs,
            Sense::Ge => a >= self.rhs,
        }
    }

    /// Smallest and largest activity over all bit vectors.
    pub fn activity_range(&self) -> (i64, i64) {
        self.terms.iter().fold((0, 0), |(lo, hi), &(_, c)| {
            if c < 0 {
                (lo + c, hi)
            } else {
                (lo, hi + c)
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IlpModel {
    pub grid: AngleGrid,
    pub transitions: TransitionTable,
    /// Number of queue slots `Q`.
    pub slots: usize,
    pub weights: Vec<u64>,
    /// `γ[f][α]`.
    pub gamma: Vec<Vec<f64>>,
    pub vars: Vec<Var>,
    pub rows: Vec<Row>,
    /// Objective coefficient per variable (maximized).
    pub objective: Vec<f64>,
    x_base: Vec<usize>,
    y_base: Vec<usize>,
    k_index: BTreeMap<(usize, usize), usize>,
}

impl IlpModel {
    pub fn n_requests(&self) -> usize {
        self.grid.requests.len()
    }

    pub fn n_vars(&self) -> usize {
        self.vars.len()
    }

    pub fn x(&self, f: usize, q: usize) -> usize {
        self.x_base[f] + q
    }

    pub fn y(&self, f: usize, alpha: usize) -> usize {
        self.y_base[f] + alpha
    }

    pub fn k(&self, f1: usize, f2: usize) -> usize {
        self.k_index[&(f1, f2)]
    }

    /// Objective of a bit vector, summed in variable order so that equal
    /// bit vectors always give bit-identical values.
    pub fn evaluate(&self, bits: &[u8]) -> f64 {
        self.objective
            .iter()
            .zip(bits)
            .filter(|(_, &b)| b == 1)
            .map(|(c, _)| *c)
            .sum()
    }

    /// Rows violated by `bits`.
    pub fn violated_rows(&self, bits: &[u8]) -> Vec<&Row> {
        self.rows.iter().filter(|r| !r.satisfied(bits)).collect()
    }

    /// Completion sequence encoded by `bits`: `(request index, α)` per
    /// filled slot.
    pub fn sequence(&self, bits: &[u8]) -> Vec<(usize, usize)> {
        let n = self.n_requests();
        let mut out = Vec::new();
        for q in 0..self.slots {
            if let Some(f) = (0..n).find(|&f| bits[self.x(f, q)] == 1) {
                let alpha = (0..self.grid.requests[f].candidates.len())
                    .find(|&a| bits[self.y(f, a)] == 1)
                    .unwrap_or(0);
                out.push((f, alpha));
            }
        }
        out
    }

    /// Bit vector for a completion sequence, with `κ` set on consecutive
    /// pairs only.
    pub fn encode(&self, sequence: &[(usize, usize)]) -> Vec<u8> {
        let mut bits = vec![0; self.n_vars()];
        for (q, &(f, alpha)) in sequence.iter().enumerate() {
            bits[self.x(f, q)] = 1;
            bits[self.y(f, alpha)] = 1;
        }
        for w in sequence.windows(2) {
            bits[self.k(w[0].0, w[1].0)] = 1;
        }
        bits
    }

    /// LP-style listing of variables, tagged rows and objective terms.
    pub fn dump(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "\\ {} requests, {} slots, {} variables, {} rows",
            self.n_requests(),
            self.slots,
            self.n_vars(),
            self.rows.len()
        );
        for (f, g) in self.grid.requests.iter().enumerate() {
            let _ = writeln!(
                s,
                "\\ request {f} = {} priority {} weight {}",
                g.request.request_id, g.request.priority, self.weights[f]
            );
        }
        s.push_str("maximize\n obj:");
        for (v, &c) in self.vars.iter().zip(&self.objective) {
            if c != 0.0 {
                let _ = write!(s, " {c:+} {v}");
            }
        }
        s.push_str("\nsubject to\n");
        let mut counter: BTreeMap<&str, usize> = BTreeMap::new();
        for row in &self.rows {
            let n = counter.entry(row.tag.as_str()).or_default();
            let _ = write!(s, " {}_{}:", row.tag, n);
            *n += 1;
            for &(v, c) in &row.terms {
                let _ = write!(s, " {c:+} {}", self.vars[v]);
            }
            let op = match row.sense {
                Sense::Le => "<=",
                Sense::Eq => "=",
                Sense::Ge => ">=",
            };
            let _ = writeln!(s, " {op} {}", row.rhs);
        }
        s.push_str("binary\n");
        for v in &self.vars {
            let _ = writeln!(s, " {v}");
        }
        s.push_str("end\n");
        s
    }
}

/// `γ` for one candidate: window-relative seconds over `Q` times the
/// window slack, so that it lies in `[0, 1/Q]`.
fn gamma(start_ms: i64, g: &GridRequest, slots: usize) -> f64 {
    let slack_s = (g.last_start_ms() - g.window_start_ms) as f64 / 1000.0;
    if slack_s <= 0.0 {
        return 0.0;
    }
    let rel_s = (start_ms - g.window_start_ms) as f64 / 1000.0;
    rel_s / (slots as f64 * slack_s)
}

/// Assembles variables, weights, coefficients and the tagged rows.
pub fn build_model(grid: AngleGrid, transitions: TransitionTable) -> IlpModel {
    let n = grid.requests.len();
    let slots = n;
    let weights = priority_weights(&grid.requests.iter().map(|g| g.request.priority).collect::<Vec<_>>());
    let gamma: Vec<Vec<f64>> = grid
        .requests
        .iter()
        .map(|g| g.candidates.iter().map(|c| gamma(c.start_ms, g, slots)).collect())
        .collect();

    let mut vars = Vec::new();
    let mut objective = Vec::new();
    let mut x_base = Vec::with_capacity(n);
    for f in 0..n {
        x_base.push(vars.len());
        for q in 0..slots {
            vars.push(Var::X { f, q });
            objective.push(weights[f] as f64);
        }
    }
    let mut y_base = Vec::with_capacity(n);
    for (f, g) in grid.requests.iter().enumerate() {
        y_base.push(vars.len());
        for alpha in 0..g.candidates.len() {
            vars.push(Var::Y { f, alpha });
            objective.push(-gamma[f][alpha]);
        }
    }
    let mut k_index = BTreeMap::new();
    for f1 in 0..n {
        for f2 in 0..n {
            if f1 != f2 {
                k_index.insert((f1, f2), vars.len());
                vars.push(Var::K { f1, f2 });
                objective.push(0.0);
            }
        }
    }

    let xv = |f: usize, q: usize| x_base[f] + q;
    let yv = |f: usize, a: usize| y_base[f] + a;
    let kv = |f1: usize, f2: usize| k_index[&(f1, f2)];
    let n_alpha = |f: usize| grid.requests[f].candidates.len();
    let mut rows = Vec::new();
    let mut row = |tag: &str, terms: Vec<(usize, i64)>, sense: Sense, rhs: i64| {
        rows.push(Row {
            tag: tag.to_string(),
            terms,
            sense,
            rhs,
        })
    };

    // each request in at most one slot
    for f in 0..n {
        row("one_slot_per_request", (0..slots).map(|q| (xv(f, q), 1)).collect(), Sense::Le, 1);
    }
    // each slot holds at most one request
    for q in 0..slots {
        row("one_request_per_slot", (0..n).map(|f| (xv(f, q), 1)).collect(), Sense::Le, 1);
    }
    // a completed request starts at exactly one candidate
    for f in 0..n {
        let mut t: Vec<(usize, i64)> = (0..n_alpha(f)).map(|a| (yv(f, a), 1)).collect();
        t.extend((0..slots).map(|q| (xv(f, q), -1)));
        row("start_iff_completed", t, Sense::Eq, 0);
    }
    // no empty slot before a filled one
    for q in 1..slots {
        let mut t: Vec<(usize, i64)> = (0..n).map(|f| (xv(f, q), 1)).collect();
        t.extend((0..n).map(|f| (xv(f, q - 1), -1)));
        row("slots_contiguous", t, Sense::Le, 0);
    }
    // consecutive slots imply a direct succession
    for f1 in 0..n {
        for f2 in 0..n {
            if f1 == f2 {
                continue;
            }
            for q in 1..slots {
                row(
                    "consecutive_link",
                    vec![(kv(f1, f2), 1), (xv(f1, q - 1), -1), (xv(f2, q), -1)],
                    Sense::Ge,
                    -1,
                );
            }
        }
    }
    for f1 in 0..n {
        let t = (0..n).filter(|&f2| f2 != f1).map(|f2| (kv(f1, f2), 1)).collect::<Vec<_>>();
        if !t.is_empty() {
            row("one_successor", t, Sense::Le, 1);
        }
    }
    for f2 in 0..n {
        let t = (0..n).filter(|&f1| f1 != f2).map(|f1| (kv(f1, f2), 1)).collect::<Vec<_>>();
        if !t.is_empty() {
            row("one_predecessor", t, Sense::Le, 1);
        }
    }
    // successions only between completed requests
    for f1 in 0..n {
        if n < 2 {
            break;
        }
        let mut t: Vec<(usize, i64)> = (0..n).filter(|&f2| f2 != f1).map(|f2| (kv(f1, f2), 1)).collect();
        t.extend((0..slots).map(|q| (xv(f1, q), -1)));
        row("link_from_completed", t, Sense::Le, 0);
    }
    for f2 in 0..n {
        if n < 2 {
            break;
        }
        let mut t: Vec<(usize, i64)> = (0..n).filter(|&f1| f1 != f2).map(|f1| (kv(f1, f2), 1)).collect();
        t.extend((0..slots).map(|q| (xv(f2, q), -1)));
        row("link_to_completed", t, Sense::Le, 0);
    }
    // the successor's start is fixed by the predecessor's start
    for (f1, f2) in transitions.pairs() {
        for alpha in 0..n_alpha(f1) {
            match transitions.successor(f1, f2, alpha) {
                Some(beta) => row(
                    "successor_start",
                    vec![(yv(f1, alpha), 1), (kv(f1, f2), 1), (yv(f2, beta), -1)],
                    Sense::Le,
                    1,
                ),
                None => row("successor_start", vec![(yv(f1, alpha), 1), (kv(f1, f2), 1)], Sense::Le, 1),
            }
        }
    }
    for (f1, f2) in transitions.pairs() {
        let mut t: Vec<(usize, i64)> = (0..n_alpha(f2)).map(|a| (yv(f2, a), 1)).collect();
        t.push((kv(f1, f2), -1));
        row("successor_started", t, Sense::Ge, 0);
    }
    for f1 in 0..n {
        for f2 in 0..n {
            if f1 != f2 && !transitions.contains(f1, f2) {
                row("no_transition", vec![(kv(f1, f2), 1)], Sense::Eq, 0);
            }
        }
    }
    // the first slot starts at the earliest candidate
    if slots > 0 {
        for f in 0..n {
            row("first_slot_earliest", vec![(yv(f, 0), 1), (xv(f, 0), -1)], Sense::Ge, 0);
        }
    }

    IlpModel {
        grid,
        transitions,
        slots,
        weights,
        gamma,
        vars,
        rows,
        objective,
        x_base,
        y_base,
        k_index,
    }
}

/// Grid, transitions and model in one call.
pub fn model_for(
    requests: &[(&AcquisitionRequest, i64)],
    ephemeris: &Ephemeris,
    step_s: i64,
) -> Result<IlpModel> {
    let grid = build_trimmed_grid(requests, ephemeris, step_s)?;
    let transitions = build_transitions(&grid, ephemeris);
    Ok(build_model(grid, transitions))
}

/// Solver output.
#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    pub bits: Vec<u8>,
    pub objective: f64,
    /// False when the search stopped on its time limit.
    pub proven: bool,
    pub nodes: u64,
}

/// Turns a solved model into chained acquisitions.
///
/// `prev` is the last acquisition before this cluster, if any; it sets the
/// relay of the first acquisition, which otherwise slews from nadir.
pub fn extract_acquisitions(
    assignment: &Assignment,
    model: &IlpModel,
    ephemeris: &Ephemeris,
    prev: Option<(&AcquisitionRequest, i64)>,
) -> Result<Vec<ChainedAcquisition>> {
    if assignment.bits.len() != model.n_vars() {
        return Err(Error::Internal(format!(
            "assignment has {} bits, model {}",
            assignment.bits.len(),
            model.n_vars()
        )));
    }
    if let Some(r) = model.violated_rows(&assignment.bits).first() {
        return Err(Error::Internal(format!("assignment violates a {} row", r.tag)));
    }
    let mut out: Vec<ChainedAcquisition> = Vec::new();
    let mut last = prev;
    for (f, alpha) in model.sequence(&assignment.bits) {
        let g = &model.grid.requests[f];
        let c = &g.candidates[alpha];
        let relay = match last {
            None => maneuver_duration(&Attitude::nadir(), &c.start_attitude),
            Some((preq, pend)) => {
                let t_min = min_relay_time(pend, preq, &g.request, ephemeris).ok_or_else(|| {
                    Error::Internal(format!("no relay {} -> {}", preq.request_id, g.request.request_id))
                })?;
                if c.start_ms < pend + t_min * 1000 {
                    return Err(Error::Internal(format!(
                        "{} starts before {} plus its relay",
                        g.request.request_id, preq.request_id
                    )));
                }
                t_min
            }
        };
        let tau = g.request.acquisition_duration_ms();
        out.push(ChainedAcquisition {
            request_id: g.request.request_id.clone(),
            acquisition_start_ms: c.start_ms,
            acquisition_duration_ms: tau,
            relay_duration_s_from_previous: relay,
            start_attitude: c.start_attitude,
            end_attitude: c.end_attitude,
        });
        last = Some((&g.request, c.start_ms + tau));
    }
    Ok(out)
}

/// Single-cluster plan: the acquisitions of `assignment` with no
/// predecessor.
pub fn extract_plan(
    assignment: &Assignment,
    model: &IlpModel,
    ephemeris: &Ephemeris,
) -> Result<Vec<ChainedAcquisition>> {
    extract_acquisitions(assignment, model, ephemeris, None)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weight_rule() {
        assert_eq!(priority_weights(&[4, 4, 2]), vec![1, 1, 3]);
        assert_eq!(priority_weights(&[1, 2, 2]), vec![3, 1, 1]);
        assert_eq!(priority_weights(&[1, 2, 3, 4]), vec![8, 4, 2, 1]);
        assert_eq!(priority_weights(&[3]), vec![1]);
        assert!(priority_weights(&[]).is_empty());
    }

    #[test]
    fn row_ranges() {
        let r = Row {
            tag: "successor_start".into(),
            terms: vec![(0, 1), (1, 1), (2, -1)],
            sense: Sense::Le,
            rhs: 1,
        };
        assert_eq!(r.activity_range(), (-1, 2));
        assert!(r.satisfied(&[1, 0, 0]));
        assert!(!r.satisfied(&[1, 1, 0]));
        assert!(r.satisfied(&[1, 1, 1]));
    }
}
