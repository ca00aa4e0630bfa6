//! The baseline greedy scheduler.
//!
//! Each cluster gets a clock that walks forward in whole seconds from the
//! start of the ephemeris. Whenever one or more requests of the cluster are
//! open, the highest-priority one is committed if its relay and acquisition
//! still fit; otherwise it is skipped. Cluster timelines are merged
//! afterwards and conflicts are resolved in start order.

use std::collections::BTreeMap;

use crate::chaining::{link_clusters, make_acquisition};
use crate::clustering::Cluster;
use crate::geometry::{min_relay_from, min_relay_time, Attitude, Ephemeris};
use crate::model::{AcquisitionRequest, ChainedAcquisition, Plan, ProblemInstance};

/// Schedules every satellite of `instance` over `clusters`.
///
/// `clusters` maps a satellite id to its partition; satellites without an
/// entry get no acquisitions. Requests that are unknown, completed, or
/// assigned to another satellite are ignored.
pub fn greedy_schedule(instance: &ProblemInstance, clusters: &BTreeMap<String, Vec<Cluster>>) -> Plan {
    let index = instance.request_index();
    let mut satellites = BTreeMap::new();
    for (sat, eph) in &instance.satellites {
        let Some(parts) = clusters.get(sat) else {
            satellites.insert(sat.clone(), Vec::new());
            continue;
        };
        let mut ordered: Vec<Vec<&AcquisitionRequest>> = parts
            .iter()
            .map(|c| {
                c.request_ids
                    .iter()
                    .filter_map(|id| index.get(id.as_str()).copied())
                    .filter(|r| !r.completed && r.satellite_id == *sat)
                    .collect::<Vec<_>>()
            })
            .filter(|c| !c.is_empty())
            .collect();
        ordered.sort_by_key(|c| c.iter().map(|r| r.dto_start_ms).min());
        satellites.insert(sat.clone(), schedule_satellite(&ordered, eph));
    }
    Plan::new(satellites).with_stats(instance)
}

/// Greedy pass over one satellite's clusters.
///
/// Every cluster is scheduled on its own clock starting at the beginning
/// of the ephemeris. The cluster timelines are then merged by start time;
/// an acquisition is delayed until the relay from its predecessor fits, or
/// dropped when its window can no longer hold it.
pub fn schedule_satellite(
    clusters: &[Vec<&AcquisitionRequest>],
    ephemeris: &Ephemeris,
) -> Vec<ChainedAcquisition> {
    let mut merged: Vec<ChainedAcquisition> =
        clusters.iter().flat_map(|c| schedule_cluster(c, ephemeris)).collect();
    merged.sort_by(|a, b| (a.acquisition_start_ms, &a.request_id).cmp(&(b.acquisition_start_ms, &b.request_id)));
    let index: BTreeMap<&str, &AcquisitionRequest> =
        clusters.iter().flatten().map(|r| (r.request_id.as_str(), *r)).collect();
    link_clusters(&[merged], &index, ephemeris).acquisitions
}

/// One cluster on a fresh 1 s clock.
pub fn schedule_cluster(cluster: &[&AcquisitionRequest], ephemeris: &Ephemeris) -> Vec<ChainedAcquisition> {
    let mut clock = ephemeris.span().0;
    let mut out: Vec<ChainedAcquisition> = Vec::new();
    let mut prev: Option<&AcquisitionRequest> = None;
    let mut pending: Vec<&AcquisitionRequest> = cluster.to_vec();
    loop {
        pending.retain(|r| clock + r.acquisition_duration_ms() <= r.dto_end_ms);
        if pending.is_empty() {
            break;
        }
        let open: Vec<&AcquisitionRequest> =
            pending.iter().copied().filter(|r| r.dto_start_ms <= clock).collect();
        if open.is_empty() {
            // jump the 1 s clock to the next opening window
            let next = pending.iter().map(|r| r.dto_start_ms).min().unwrap();
            clock += (next - clock + 999) / 1000 * 1000;
            continue;
        }
        let pick = *open
            .iter()
            .min_by(|a, b| {
                (a.priority, a.dto_end_ms, &a.request_id).cmp(&(b.priority, b.dto_end_ms, &b.request_id))
            })
            .unwrap();
        pending.retain(|r| r.request_id != pick.request_id);

        let relay = match (prev, out.last()) {
            (Some(p), Some(last)) => {
                min_relay_time(last.end_ms(), p, pick, ephemeris).map(|d| (d, last.end_ms() + d * 1000))
            }
            _ => min_relay_from(clock, &Attitude::nadir(), pick, ephemeris).map(|d| (d, clock + d * 1000)),
        };
        let Some((relay_s, earliest)) = relay else {
            continue;
        };
        let start = earliest.max(clock);
        if start + pick.acquisition_duration_ms() > pick.dto_end_ms {
            continue;
        }
        let Ok(acq) = make_acquisition(pick, ephemeris, start, relay_s) else {
            continue;
        };
        clock = acq.end_ms();
        prev = Some(pick);
        out.push(acq);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{generate_instance_with, GeneratorConfig, PriorityMix};

    fn instance(n: usize, seed: u64) -> ProblemInstance {
        let config = GeneratorConfig {
            horizon_s: 4 * 3600,
            ..GeneratorConfig::default()
        };
        generate_instance_with(&config, 1, n, &PriorityMix::default(), seed).unwrap()
    }

    #[test]
    fn empty_cluster_list_gives_empty_plan() {
        let inst = instance(5, 1);
        let plan = greedy_schedule(&inst, &BTreeMap::new());
        assert!(plan.is_empty());
        assert_eq!(plan.stats.completed_total(), 0);
    }
}
