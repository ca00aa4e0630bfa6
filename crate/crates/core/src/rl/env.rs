//! The two planning environments.
//!
//! In the satellite-centred environment one satellite walks its timeline
//! and the agent picks which visible request to acquire next. In the
//! request-centred environment requests arrive in DTO order and the agent
//! picks the satellite that should take each one.

use std::sync::Arc;

use crate::chaining::make_acquisition;
use crate::error::{Error, Result};
use crate::geometry::{
    compute_dto_window, min_relay_from, min_relay_time, Attitude, Ephemeris,
};
use crate::model::{AcquisitionRequest, ChainedAcquisition};

/// Request slots in the satellite-centred view.
pub const VIEW_SLOTS: usize = 100;
/// Features per request slot.
pub const SLOT_FEATURES: usize = 10;
/// Global features appended after the slots.
pub const GLOBAL_FEATURES: usize = 3;
/// `100·10 + 3`.
pub const SAT_OBS_DIM: usize = VIEW_SLOTS * SLOT_FEATURES + GLOBAL_FEATURES;

/// Longest possible slew, in seconds, at 1 deg/s.
const MAX_SLEW_S: i64 = 180;

/// A finite-horizon decision process with a fixed action set.
pub trait Environment: Clone {
    fn obs_dim(&self) -> usize;
    fn n_actions(&self) -> usize;
    fn observation(&self) -> Vec<f64>;
    /// Actions the policy may choose; masked actions get zero probability.
    fn action_mask(&self) -> Vec<bool>;
    /// Applies `action`, returning the reward and whether the episode ended.
    fn step(&mut self, action: usize) -> Result<(f64, bool)>;
    fn is_done(&self) -> bool;
    /// Upper bound on the reward still obtainable from this state.
    fn max_remaining_reward(&self) -> f64;
}

/// Slot features of one request relative to the current clock.
fn request_features(r: &AcquisitionRequest, clock_ms: i64, horizon_ms: f64, out: &mut Vec<f64>) {
    out.push((r.dto_start_ms - clock_ms) as f64 / horizon_ms);
    out.push((r.dto_end_ms - clock_ms) as f64 / horizon_ms);
    out.push(r.median_start.latitude_deg / 90.0);
    out.push(r.median_start.longitude_deg / 180.0);
    out.push(r.median_end.latitude_deg / 90.0);
    out.push(r.median_end.longitude_deg / 180.0);
    out.push((5 - r.priority as i64) as f64 / 4.0);
    out.push(r.acquisition_duration_ms() as f64 / 100_000.0);
}

/// Earliest feasible start of `next` for a satellite whose clock reads
/// `clock_ms` and whose last acquisition (if any) ended at `last.1`.
/// Returns the relay (s) and the start.
fn earliest_start(
    clock_ms: i64,
    last: Option<(&AcquisitionRequest, i64)>,
    next: &AcquisitionRequest,
    eph: &Ephemeris,
) -> Option<(i64, i64)> {
    let (relay, earliest) = match last {
        Some((prev, end)) => {
            let d = min_relay_time(end, prev, next, eph)?;
            (d, end + d * 1000)
        }
        None => {
            let t0 = clock_ms.max(next.dto_start_ms);
            let d = min_relay_from(t0, &Attitude::nadir(), next, eph)?;
            (d, t0 + d * 1000)
        }
    };
    let start = earliest.max(clock_ms).max(next.dto_start_ms);
    (start + next.acquisition_duration_ms() <= next.dto_end_ms).then_some((relay, start))
}

#[derive(Debug)]
struct SatShared {
    satellite_id: String,
    ephemeris: Ephemeris,
    /// Sorted by DTO start.
    requests: Vec<AcquisitionRequest>,
    tau: Vec<i64>,
    start_ms: i64,
    horizon_ms: f64,
}

/// One satellite choosing among its 100 nearest open requests.
#[derive(Debug, Clone)]
pub struct SatEnv {
    shared: Arc<SatShared>,
    clock_ms: i64,
    last: Option<(usize, i64)>,
    done_flags: Vec<bool>,
    view: Vec<usize>,
    committed: Vec<ChainedAcquisition>,
    total_reward: f64,
    steps: usize,
}

impl SatEnv {
    /// Environment over `requests` (completed ones are dropped), starting at
    /// the beginning of the ephemeris.
    pub fn new(satellite_id: &str, ephemeris: Ephemeris, requests: &[&AcquisitionRequest]) -> Self {
        let mut reqs: Vec<AcquisitionRequest> =
            requests.iter().filter(|r| !r.completed).map(|r| (*r).clone()).collect();
        reqs.sort_by(|a, b| {
            (a.dto_start_ms, a.dto_end_ms, &a.request_id).cmp(&(b.dto_start_ms, b.dto_end_ms, &b.request_id))
        });
        let (start_ms, end_ms) = ephemeris.span();
        let tau = reqs.iter().map(|r| r.acquisition_duration_ms()).collect();
        let n = reqs.len();
        let shared = Arc::new(SatShared {
            satellite_id: satellite_id.to_string(),
            ephemeris,
            requests: reqs,
            tau,
            start_ms,
            horizon_ms: ((end_ms - start_ms) as f64).max(1000.0),
        });
        let mut env = Self {
            shared,
            clock_ms: start_ms,
            last: None,
            done_flags: vec![false; n],
            view: Vec::new(),
            committed: Vec::new(),
            total_reward: 0.0,
            steps: 0,
        };
        env.refresh_view();
        env
    }

    pub fn satellite_id(&self) -> &str {
        &self.shared.satellite_id
    }

    pub fn n_requests(&self) -> usize {
        self.shared.requests.len()
    }

    pub fn clock_ms(&self) -> i64 {
        self.clock_ms
    }

    pub fn committed(&self) -> &[ChainedAcquisition] {
        &self.committed
    }

    pub fn total_reward(&self) -> f64 {
        self.total_reward
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    /// Request ids in the current view, slot order.
    pub fn view_ids(&self) -> Vec<&str> {
        self.view.iter().map(|&i| self.shared.requests[i].request_id.as_str()).collect()
    }

    fn refresh_view(&mut self) {
        let s = &self.shared;
        self.view = (0..s.requests.len())
            .filter(|&i| !self.done_flags[i] && s.requests[i].dto_end_ms - s.tau[i] >= self.clock_ms)
            .take(VIEW_SLOTS)
            .collect();
    }

    fn last_pair(&self) -> Option<(&AcquisitionRequest, i64)> {
        self.last.map(|(i, end)| (&self.shared.requests[i], end))
    }

    /// Relay and start if request `i` were picked now.
    pub fn pick_outcome(&self, i: usize) -> Option<(i64, i64)> {
        earliest_start(self.clock_ms, self.last_pair(), &self.shared.requests[i], &self.shared.ephemeris)
    }

    /// Slots whose request would be committed if picked now.
    pub fn committing_actions(&self) -> Vec<bool> {
        (0..VIEW_SLOTS)
            .map(|a| self.view.get(a).is_some_and(|&i| self.pick_outcome(i).is_some()))
            .collect()
    }

    fn feasible_flag(&self, i: usize) -> bool {
        let r = &self.shared.requests[i];
        let free_from = self.last.map_or(self.clock_ms, |(_, end)| end.max(self.clock_ms));
        // a full slew always fits before a window opening this late
        if r.dto_start_ms - free_from >= (MAX_SLEW_S + 1) * 1000 && r.dto_start_ms + self.shared.tau[i] <= r.dto_end_ms {
            return true;
        }
        self.pick_outcome(i).is_some()
    }

    /// Best total reward from here, by exhaustive search over committing
    /// actions. Exponential; meant for toy instances.
    pub fn oracle_best(&self) -> f64 {
        let mut best = 0.0f64;
        for a in 0..self.view.len() {
            if self.pick_outcome(self.view[a]).is_some() {
                let mut next = self.clone();
                let (r, _) = next.step(a).expect("slot in range");
                best = best.max(r + next.oracle_best());
            }
        }
        best
    }
}

impl Environment for SatEnv {
    fn obs_dim(&self) -> usize {
        SAT_OBS_DIM
    }

    fn n_actions(&self) -> usize {
        VIEW_SLOTS
    }

    fn observation(&self) -> Vec<f64> {
        let s = &self.shared;
        let mut out = Vec::with_capacity(SAT_OBS_DIM);
        for &i in &self.view {
            request_features(&s.requests[i], self.clock_ms, s.horizon_ms, &mut out);
            out.push(if self.done_flags[i] { 1.0 } else { 0.0 });
            out.push(if self.feasible_flag(i) { 1.0 } else { 0.0 });
        }
        out.resize(VIEW_SLOTS * SLOT_FEATURES, 0.0);
        out.push((self.clock_ms - s.start_ms) as f64 / s.horizon_ms);
        match self.committed.last().and_then(|a| s.requests.iter().find(|r| r.request_id == a.request_id)) {
            Some(r) => {
                out.push(r.median_start.latitude_deg / 90.0);
                out.push(r.median_start.longitude_deg / 180.0);
            }
            None => out.extend([0.0, 0.0]),
        }
        out
    }

    fn action_mask(&self) -> Vec<bool> {
        (0..VIEW_SLOTS).map(|a| a < self.view.len()).collect()
    }

    fn step(&mut self, action: usize) -> Result<(f64, bool)> {
        if action >= VIEW_SLOTS {
            return Err(Error::Argument(format!("action {action} outside 0..{VIEW_SLOTS}")));
        }
        if self.is_done() {
            return Ok((0.0, true));
        }
        self.steps += 1;
        let mut reward = 0.0;
        let picked = self.view.get(action).copied();
        match picked.and_then(|i| self.pick_outcome(i).map(|o| (i, o))) {
            Some((i, (relay, start))) => {
                let acq = make_acquisition(&self.shared.requests[i], &self.shared.ephemeris, start, relay)?;
                self.clock_ms = acq.end_ms();
                self.last = Some((i, acq.end_ms()));
                self.done_flags[i] = true;
                self.committed.push(acq);
                reward = 1.0;
            }
            None => self.clock_ms += 1000,
        }
        self.total_reward += reward;
        self.refresh_view();
        Ok((reward, self.is_done()))
    }

    fn is_done(&self) -> bool {
        self.view.is_empty()
    }

    fn max_remaining_reward(&self) -> f64 {
        let s = &self.shared;
        (0..s.requests.len())
            .filter(|&i| !self.done_flags[i] && s.requests[i].dto_end_ms - s.tau[i] >= self.clock_ms)
            .count() as f64
    }
}

/// Requests beyond the current one summarized per satellite.
pub const REQ_LOOKAHEAD: usize = 5;
/// Features per satellite in the request-centred observation.
pub const REQ_SAT_FEATURES: usize = 3 + REQ_LOOKAHEAD;

#[derive(Debug)]
struct ReqShared {
    satellites: Vec<(String, Ephemeris)>,
    /// `options[f][s]`: request `f` as seen by satellite `s`, with that
    /// satellite's window, if it has one.
    options: Vec<Vec<Option<AcquisitionRequest>>>,
    order: Vec<usize>,
    requests: Vec<AcquisitionRequest>,
    start_ms: i64,
    horizon_ms: f64,
}

/// Requests in DTO order, each assigned to a satellite by the agent.
#[derive(Debug, Clone)]
pub struct ReqEnv {
    shared: Arc<ReqShared>,
    cursor: usize,
    clocks: Vec<i64>,
    last: Vec<Option<(usize, i64)>>,
    committed: Vec<Vec<ChainedAcquisition>>,
    total_reward: f64,
}

impl ReqEnv {
    /// `search_margin_s` widens each request's window search on the other
    /// satellites.
    pub fn new(
        satellites: Vec<(String, Ephemeris)>,
        requests: &[&AcquisitionRequest],
        search_margin_s: i64,
    ) -> Self {
        let requests: Vec<AcquisitionRequest> =
            requests.iter().filter(|r| !r.completed).map(|r| (*r).clone()).collect();
        let options = requests
            .iter()
            .map(|r| {
                satellites
                    .iter()
                    .map(|(id, eph)| {
                        if *id == r.satellite_id {
                            return Some(r.clone());
                        }
                        let (lo, hi) = eph.span();
                        let range = (
                            (r.dto_start_ms - search_margin_s * 1000).max(lo),
                            (r.dto_end_ms + search_margin_s * 1000).min(hi),
                        );
                        let w = compute_dto_window(&r.center(), eph, Some(range)).ok()?;
                        let copy = AcquisitionRequest {
                            dto_start_ms: w.start_ms.div_euclid(1000) * 1000 + 1000,
                            dto_end_ms: w.end_ms.div_euclid(1000) * 1000,
                            satellite_id: id.clone(),
                            ..r.clone()
                        };
                        (copy.dto_end_ms - copy.dto_start_ms >= copy.acquisition_duration_ms()).then_some(copy)
                    })
                    .collect()
            })
            .collect();
        let mut order: Vec<usize> = (0..requests.len()).collect();
        order.sort_by_key(|&i| (requests[i].dto_start_ms, requests[i].dto_end_ms, requests[i].request_id.clone()));
        let start_ms = satellites.iter().map(|(_, e)| e.span().0).min().unwrap_or(0);
        let end_ms = satellites.iter().map(|(_, e)| e.span().1).max().unwrap_or(0);
        let n_sats = satellites.len();
        Self {
            shared: Arc::new(ReqShared {
                satellites,
                options,
                order,
                requests,
                start_ms,
                horizon_ms: ((end_ms - start_ms) as f64).max(1000.0),
            }),
            cursor: 0,
            clocks: vec![start_ms; n_sats],
            last: vec![None; n_sats],
            committed: vec![Vec::new(); n_sats],
            total_reward: 0.0,
        }
    }

    /// Overrides the satellites' clocks, e.g. to model busy satellites.
    pub fn with_clocks(mut self, clocks: &[i64]) -> Self {
        self.clocks.copy_from_slice(clocks);
        self
    }

    pub fn n_satellites(&self) -> usize {
        self.shared.satellites.len()
    }

    pub fn committed(&self) -> &[Vec<ChainedAcquisition>] {
        &self.committed
    }

    pub fn total_reward(&self) -> f64 {
        self.total_reward
    }

    /// Relay and start of request `f` on satellite `s` from its current state.
    pub fn execution(&self, f: usize, s: usize) -> Option<(i64, i64)> {
        let sh = &self.shared;
        let option = sh.options[f][s].as_ref()?;
        let last = self.last[s].and_then(|(p, end)| sh.options[p][s].as_ref().map(|r| (r, end)));
        earliest_start(self.clocks[s], last, option, &sh.satellites[s].1)
    }

    /// Completion time of request `f` on satellite `s`, if it fits.
    pub fn execution_end_ms(&self, f: usize, s: usize) -> Option<i64> {
        let option = self.shared.options[f][s].as_ref()?;
        self.execution(f, s).map(|(_, start)| start + option.acquisition_duration_ms())
    }

    fn current(&self) -> Option<usize> {
        self.shared.order.get(self.cursor).copied()
    }
}

impl Environment for ReqEnv {
    fn obs_dim(&self) -> usize {
        SLOT_FEATURES + REQ_SAT_FEATURES * self.n_satellites()
    }

    fn n_actions(&self) -> usize {
        self.n_satellites()
    }

    fn observation(&self) -> Vec<f64> {
        let sh = &self.shared;
        let mut out = Vec::with_capacity(self.obs_dim());
        let Some(f) = self.current() else {
            out.resize(self.obs_dim(), 0.0);
            return out;
        };
        let r = &sh.requests[f];
        let now = self.clocks.iter().copied().min().unwrap_or(sh.start_ms);
        request_features(r, now, sh.horizon_ms, &mut out);
        out.push(0.0);
        out.push(if (0..self.n_satellites()).any(|s| self.execution(f, s).is_some()) { 1.0 } else { 0.0 });
        let rel = |t: Option<i64>| t.map_or(1.0, |t| (t - r.dto_start_ms) as f64 / sh.horizon_ms);
        for s in 0..self.n_satellites() {
            let end = self.execution_end_ms(f, s);
            out.push(rel(end));
            out.push(if end.is_some() { 1.0 } else { 0.0 });
            out.push((self.clocks[s] - sh.start_ms) as f64 / sh.horizon_ms);
            for k in 1..=REQ_LOOKAHEAD {
                let next = sh.order.get(self.cursor + k).and_then(|&g| self.execution_end_ms(g, s));
                out.push(rel(next));
            }
        }
        out
    }

    fn action_mask(&self) -> Vec<bool> {
        vec![true; self.n_satellites()]
    }

    fn step(&mut self, action: usize) -> Result<(f64, bool)> {
        if action >= self.n_satellites() {
            return Err(Error::Argument(format!(
                "satellite index {action} outside 0..{}",
                self.n_satellites()
            )));
        }
        let Some(f) = self.current() else {
            return Ok((0.0, true));
        };
        let mut reward = 0.0;
        if let Some((relay, start)) = self.execution(f, action) {
            let sh = Arc::clone(&self.shared);
            let option = sh.options[f][action].as_ref().expect("execution implies an option");
            let acq = make_acquisition(option, &sh.satellites[action].1, start, relay)?;
            self.clocks[action] = acq.end_ms();
            self.last[action] = Some((f, acq.end_ms()));
            self.committed[action].push(acq);
            reward = 1.0;
        }
        self.cursor += 1;
        self.total_reward += reward;
        Ok((reward, self.is_done()))
    }

    fn is_done(&self) -> bool {
        self.cursor >= self.shared.order.len()
    }

    fn max_remaining_reward(&self) -> f64 {
        self.shared.order.len().saturating_sub(self.cursor) as f64
    }
}
