//! Solution chaining: turning scattered per-window acquisitions into one
//! time-feasible sequence per satellite, and connecting consecutive
//! clusters.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use thiserror::Error;

use crate::error::Result;
use crate::geometry::{
    end_attitude, maneuver_duration, min_relay_time, start_attitude, unconstrained_relay,
    Attitude, Ephemeris,
};
use crate::model::{AcquisitionRequest, ChainedAcquisition, Plan};

/// An intended acquisition start, before relay times are inserted.
#[derive(Debug, Clone, Copy)]
pub struct Candidate<'a> {
    pub request: &'a AcquisitionRequest,
    pub start_ms: i64,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("cannot chain {} -> {to}: short by {deficit_s} s", from.as_deref().unwrap_or("<nadir>"))]
pub struct ChainError {
    /// `None` when the first candidate itself does not fit its window.
    pub from: Option<String>,
    pub to: String,
    pub deficit_s: i64,
}

/// Builds the acquisition record, attitudes included.
pub fn make_acquisition(
    request: &AcquisitionRequest,
    ephemeris: &Ephemeris,
    start_ms: i64,
    relay_s: i64,
) -> Result<ChainedAcquisition> {
    let tau = request.acquisition_duration_ms();
    Ok(ChainedAcquisition {
        request_id: request.request_id.clone(),
        acquisition_start_ms: start_ms,
        acquisition_duration_ms: tau,
        relay_duration_s_from_previous: relay_s,
        start_attitude: start_attitude(request, ephemeris, start_ms)?,
        end_attitude: end_attitude(request, ephemeris, start_ms + tau)?,
    })
}

/// Smallest whole-second shift of `intended` that reaches `required`.
fn shift_to(intended: i64, required: i64) -> i64 {
    if intended >= required {
        intended
    } else {
        intended + (required - intended + 999) / 1000 * 1000
    }
}

fn deficit_s(end_ms: i64, deadline_ms: i64) -> i64 {
    ((end_ms - deadline_ms) + 999).div_euclid(1000)
}

/// Inserts relay times between consecutive candidates, shifting starts as
/// late as needed. Fails on the first pair that cannot fit; never reorders.
pub fn chain(
    candidates: &[Candidate<'_>],
    ephemeris: &Ephemeris,
) -> Result<Vec<ChainedAcquisition>, ChainError> {
    let mut out: Vec<ChainedAcquisition> = Vec::with_capacity(candidates.len());
    let mut prev: Option<(&AcquisitionRequest, i64)> = None;
    for c in candidates {
        let req = c.request;
        let tau = req.acquisition_duration_ms();
        let (required, relay) = match prev {
            None => (req.dto_start_ms, None),
            Some((preq, pend)) => match min_relay_time(pend, preq, req, ephemeris) {
                Some(t_min) => (pend + t_min * 1000, Some(t_min)),
                None => {
                    let deficit = end_attitude(preq, ephemeris, pend)
                        .ok()
                        .and_then(|from| unconstrained_relay(pend, &from, req, ephemeris))
                        .map(|d| deficit_s(pend + d * 1000 + tau, req.dto_end_ms))
                        .unwrap_or(i64::MAX);
                    return Err(ChainError {
                        from: Some(preq.request_id.clone()),
                        to: req.request_id.clone(),
                        deficit_s: deficit.max(1),
                    });
                }
            },
        };
        let start = shift_to(c.start_ms, required.max(req.dto_start_ms));
        if start + tau > req.dto_end_ms {
            return Err(ChainError {
                from: prev.map(|(p, _)| p.request_id.clone()),
                to: req.request_id.clone(),
                deficit_s: deficit_s(start + tau, req.dto_end_ms),
            });
        }
        let relay = match relay {
            Some(r) => r,
            None => {
                let att = start_attitude(req, ephemeris, start).map_err(|_| ChainError {
                    from: None,
                    to: req.request_id.clone(),
                    deficit_s: 0,
                })?;
                maneuver_duration(&Attitude::nadir(), &att)
            }
        };
        let acq = make_acquisition(req, ephemeris, start, relay).map_err(|_| ChainError {
            from: prev.map(|(p, _)| p.request_id.clone()),
            to: req.request_id.clone(),
            deficit_s: 0,
        })?;
        prev = Some((req, acq.end_ms()));
        out.push(acq);
    }
    Ok(out)
}

/// Result of linking a satellite's per-cluster plans.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LinkOutcome {
    pub acquisitions: Vec<ChainedAcquisition>,
    /// Requests removed because their window could not absorb the inbound
    /// relay.
    pub dropped: Vec<String>,
}

/// Concatenates per-cluster plans of one satellite. Each acquisition is
/// delayed (whole seconds) until the relay from its predecessor fits, and
/// dropped if its window can no longer hold it.
pub fn link_clusters(
    per_cluster_plans: &[Vec<ChainedAcquisition>],
    requests: &BTreeMap<&str, &AcquisitionRequest>,
    ephemeris: &Ephemeris,
) -> LinkOutcome {
    let mut out = LinkOutcome::default();
    let mut prev: Option<(&AcquisitionRequest, i64)> = None;
    for a in per_cluster_plans.iter().flatten() {
        let Some(&req) = requests.get(a.request_id.as_str()) else {
            out.dropped.push(a.request_id.clone());
            continue;
        };
        let Some((preq, pend)) = prev else {
            out.acquisitions.push(a.clone());
            prev = Some((req, a.end_ms()));
            continue;
        };
        let Some(t_min) = min_relay_time(pend, preq, req, ephemeris) else {
            out.dropped.push(a.request_id.clone());
            continue;
        };
        let start = shift_to(a.acquisition_start_ms, pend + t_min * 1000);
        if start + a.acquisition_duration_ms > req.dto_end_ms {
            out.dropped.push(a.request_id.clone());
            continue;
        }
        let acq = if start == a.acquisition_start_ms {
            ChainedAcquisition {
                relay_duration_s_from_previous: t_min,
                ..a.clone()
            }
        } else {
            match make_acquisition(req, ephemeris, start, t_min) {
                Ok(acq) => acq,
                Err(_) => {
                    out.dropped.push(a.request_id.clone());
                    continue;
                }
            }
        };
        prev = Some((req, acq.end_ms()));
        out.acquisitions.push(acq);
    }
    out
}

/// Earliest start for `request` after an acquisition of `prev` ending at
/// `prev_end_ms`, or `None` when the relay cannot fit in its DTO.
pub fn trimmed_start(
    prev: Option<(&AcquisitionRequest, i64)>,
    request: &AcquisitionRequest,
    ephemeris: &Ephemeris,
) -> Option<i64> {
    match prev {
        None => Some(request.dto_start_ms),
        Some((preq, pend)) => {
            let t_min = min_relay_time(pend, preq, request, ephemeris)?;
            let start = shift_to(request.dto_start_ms, pend + t_min * 1000);
            (start + request.acquisition_duration_ms() <= request.dto_end_ms).then_some(start)
        }
    }
}

/// Gantt description: `request_id,start_ms,end_ms,relay_s` per acquisition,
/// satellites in id order.
pub fn gantt_csv(plan: &Plan) -> String {
    let mut s = String::from("request_id,start_ms,end_ms,relay_s\n");
    for acqs in plan.satellites.values() {
        for a in acqs {
            let _ = writeln!(
                s,
                "{},{},{},{}",
                a.request_id,
                a.acquisition_start_ms,
                a.end_ms(),
                a.relay_duration_s_from_previous
            );
        }
    }
    s
}
