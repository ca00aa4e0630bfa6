use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::{Plan, PlanStats, ProblemInstance};
use crate::geometry::min_relay_time;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub rule_id: String,
    pub request_id: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub ok: bool,
    pub violations: Vec<Violation>,
    /// Completion per priority. Informational; never a violation.
    pub priority_report: PlanStats,
}

impl ValidationReport {
    pub fn rules(&self) -> BTreeSet<&str> {
        self.violations.iter().map(|v| v.rule_id.as_str()).collect()
    }
}

/// Re-checks a plan against the instance.
///
/// Rules: `unknown_satellite`, `dangling_request`, `wrong_satellite`,
/// `precompleted`, `duplicate_request`, `acquisition_duration`,
/// `dto_containment`, `start_order`, `negative_relay` and `chaining`
/// (each consecutive pair leaves at least the minimum relay time).
pub fn validate_plan(plan: &Plan, instance: &ProblemInstance) -> ValidationReport {
    let index = instance.request_index();
    let mut violations = Vec::new();
    let mut seen = BTreeSet::new();
    let mut push = |rule: &str, id: &str, message: String| {
        violations.push(Violation {
            rule_id: rule.to_string(),
            request_id: id.to_string(),
            message,
        })
    };

    for (sat, acquisitions) in &plan.satellites {
        let Some(eph) = instance.satellites.get(sat) else {
            for a in acquisitions {
                push("unknown_satellite", &a.request_id, format!("satellite {sat} not in instance"));
            }
            continue;
        };
        let mut prev: Option<(&super::ChainedAcquisition, &super::AcquisitionRequest)> = None;
        for a in acquisitions {
            let id = a.request_id.as_str();
            if !seen.insert(id) {
                push("duplicate_request", id, "request appears more than once".into());
            }
            let Some(req) = index.get(id).copied() else {
                push("dangling_request", id, "request not in instance".into());
                prev = None;
                continue;
            };
            if req.satellite_id != *sat {
                push(
                    "wrong_satellite",
                    id,
                    format!("assigned to {} but planned on {sat}", req.satellite_id),
                );
            }
            if req.completed {
                push("precompleted", id, "request was already completed".into());
            }
            if a.relay_duration_s_from_previous < 0 {
                push("negative_relay", id, format!("relay {} s", a.relay_duration_s_from_previous));
            }
            let tau = req.acquisition_duration_ms();
            if a.acquisition_duration_ms != tau {
                push(
                    "acquisition_duration",
                    id,
                    format!("duration {} ms, geometry requires {tau} ms", a.acquisition_duration_ms),
                );
            }
            if a.acquisition_start_ms < req.dto_start_ms || a.end_ms() > req.dto_end_ms {
                push(
                    "dto_containment",
                    id,
                    format!(
                        "[{}, {}] not inside DTO [{}, {}]",
                        a.acquisition_start_ms,
                        a.end_ms(),
                        req.dto_start_ms,
                        req.dto_end_ms
                    ),
                );
            }
            if let Some((pa, preq)) = prev {
                if a.acquisition_start_ms <= pa.acquisition_start_ms {
                    push(
                        "start_order",
                        id,
                        format!("starts at {} after {}", a.acquisition_start_ms, pa.acquisition_start_ms),
                    );
                }
                match min_relay_time(pa.end_ms(), preq, req, eph) {
                    None => push(
                        "chaining",
                        id,
                        format!("no feasible relay from {}", pa.request_id),
                    ),
                    Some(t_min) => {
                        let earliest = pa.end_ms() + t_min * 1000;
                        if a.acquisition_start_ms < earliest {
                            push(
                                "chaining",
                                id,
                                format!(
                                    "starts {} ms before {} + t_min {} s",
                                    earliest - a.acquisition_start_ms,
                                    pa.request_id,
                                    t_min
                                ),
                            );
                        }
                    }
                }
            }
            prev = Some((a, req));
        }
    }

    ValidationReport {
        ok: violations.is_empty(),
        violations,
        priority_report: plan.compute_stats(instance),
    }
}
