//! Depth-first branch and bound over the binary variables of an
//! [`IlpModel`], with bound propagation on every row.

use std::time::{Duration, Instant};

use super::{Assignment, IlpModel, Sense};

const FREE: i8 = -1;

struct Search<'m> {
    model: &'m IlpModel,
    val: Vec<i8>,
    row_min: Vec<i64>,
    row_max: Vec<i64>,
    var_rows: Vec<Vec<(usize, i64)>>,
    trail: Vec<usize>,
    best_bits: Vec<u8>,
    best: f64,
    nodes: u64,
    deadline: Option<Instant>,
    timed_out: bool,
}

impl<'m> Search<'m> {
    fn new(model: &'m IlpModel, time_limit: Option<Duration>) -> Self {
        let mut var_rows = vec![Vec::new(); model.n_vars()];
        let mut row_min = Vec::with_capacity(model.rows.len());
        let mut row_max = Vec::with_capacity(model.rows.len());
        for (r, row) in model.rows.iter().enumerate() {
            let (lo, hi) = row.activity_range();
            row_min.push(lo);
            row_max.push(hi);
            for &(v, c) in &row.terms {
                var_rows[v].push((r, c));
            }
        }
        let zeros = vec![0; model.n_vars()];
        Self {
            model,
            val: vec![FREE; model.n_vars()],
            row_min,
            row_max,
            var_rows,
            trail: Vec::new(),
            best: model.evaluate(&zeros),
            best_bits: zeros,
            nodes: 0,
            deadline: time_limit.map(|d| Instant::now() + d),
            timed_out: false,
        }
    }

    fn fix(&mut self, v: usize, b: i8, queue: &mut Vec<usize>) {
        self.val[v] = b;
        self.trail.push(v);
        for &(r, c) in &self.var_rows[v] {
            if b == 1 {
                self.row_min[r] += c.max(0);
                self.row_max[r] += c.min(0);
            } else {
                self.row_min[r] -= c.min(0);
                self.row_max[r] -= c.max(0);
            }
            queue.push(r);
        }
    }

    fn undo(&mut self, mark: usize) {
        while self.trail.len() > mark {
            let v = self.trail.pop().unwrap();
            let b = self.val[v];
            for &(r, c) in &self.var_rows[v] {
                if b == 1 {
                    self.row_min[r] -= c.max(0);
                    self.row_max[r] -= c.min(0);
                } else {
                    self.row_min[r] += c.min(0);
                    self.row_max[r] += c.max(0);
                }
            }
            self.val[v] = FREE;
        }
    }

    /// Fixes every variable implied by the queued rows. False on conflict.
    fn propagate(&mut self, mut queue: Vec<usize>) -> bool {
        while let Some(r) = queue.pop() {
            let model = self.model;
            let row = &model.rows[r];
            let (lo, hi) = (self.row_min[r], self.row_max[r]);
            let upper = matches!(row.sense, Sense::Le | Sense::Eq);
            let lower = matches!(row.sense, Sense::Ge | Sense::Eq);
            if (upper && lo > row.rhs) || (lower && hi < row.rhs) {
                return false;
            }
            let mut forced = Vec::new();
            for &(v, c) in &row.terms {
                if self.val[v] != FREE {
                    continue;
                }
                let a = c.abs();
                if upper && lo + a > row.rhs {
                    // the bit that raises the activity is ruled out
                    forced.push((v, if c > 0 { 0 } else { 1 }));
                } else if lower && hi - a < row.rhs {
                    forced.push((v, if c > 0 { 1 } else { 0 }));
                }
            }
            for (v, b) in forced {
                if self.val[v] == FREE {
                    self.fix(v, b, &mut queue);
                } else if self.val[v] != b {
                    return false;
                }
            }
        }
        true
    }

    fn upper_bound(&self) -> f64 {
        let m = self.model;
        let mut ub = 0.0;
        for f in 0..m.n_requests() {
            let open = (0..m.slots).any(|q| self.val[m.x(f, q)] != 0);
            if open {
                ub += m.weights[f] as f64;
            }
            for a in 0..m.grid.requests[f].candidates.len() {
                if self.val[m.y(f, a)] == 1 {
                    ub -= m.gamma[f][a];
                }
            }
        }
        ub
    }

    /// Next branching variable and the value to try first.
    fn choose(&self) -> Option<(usize, i8)> {
        let m = self.model;
        for q in 0..m.slots {
            let filled = (0..m.n_requests()).any(|f| self.val[m.x(f, q)] == 1);
            if filled {
                continue;
            }
            let pick = (0..m.n_requests())
                .filter(|&f| self.val[m.x(f, q)] == FREE)
                .max_by_key(|&f| (m.weights[f], std::cmp::Reverse(f)));
            if let Some(f) = pick {
                return Some((m.x(f, q), 1));
            }
        }
        self.val.iter().position(|&b| b == FREE).map(|v| (v, 0))
    }

    fn dfs(&mut self) {
        self.nodes += 1;
        if self.nodes % 1024 == 0 {
            if let Some(d) = self.deadline {
                if Instant::now() >= d {
                    self.timed_out = true;
                }
            }
        }
        if self.timed_out {
            return;
        }
        if self.upper_bound() <= self.best - 1e-9 {
            return;
        }
        let Some((v, first)) = self.choose() else {
            let bits: Vec<u8> = self.val.iter().map(|&b| b as u8).collect();
            let obj = self.model.evaluate(&bits);
            if obj > self.best {
                self.best = obj;
                self.best_bits = bits;
            }
            return;
        };
        for b in [first, 1 - first] {
            let mark = self.trail.len();
            let mut queue = Vec::new();
            self.fix(v, b, &mut queue);
            if self.propagate(queue) {
                self.dfs();
            }
            self.undo(mark);
            if self.timed_out {
                return;
            }
        }
    }
}

/// Solves `model` to optimality, or returns the best assignment found when
/// `time_limit_s` runs out (then `proven` is false). A non-positive or
/// infinite limit means no limit.
pub fn solve_bb(model: &IlpModel, time_limit_s: f64) -> Assignment {
    let limit = (time_limit_s.is_finite() && time_limit_s > 0.0)
        .then(|| Duration::from_secs_f64(time_limit_s));
    let mut s = Search::new(model, limit);
    let all_rows: Vec<usize> = (0..model.rows.len()).collect();
    if s.propagate(all_rows) {
        s.dfs();
    }
    Assignment {
        objective: s.best,
        bits: s.best_bits,
        proven: !s.timed_out,
        nodes: s.nodes,
    }
}
