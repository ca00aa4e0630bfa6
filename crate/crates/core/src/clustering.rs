//! Pre-processing that partitions requests into clusters.
//!
//! K-means runs on request centres with great-circle distance. The three
//! bunching methods only sort and group by DTO window and priority.

use std::collections::BTreeMap;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{central_angle, eci_to_geodetic, geodetic_to_eci, Vec3, REFERENCE_EPOCH_MS};
use crate::model::{AcquisitionRequest, GeoPoint};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cluster {
    pub cluster_id: usize,
    pub request_ids: Vec<String>,
    pub centroid: Option<GeoPoint>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ClusterMethod {
    Kmeans,
    DtoBunch,
    PriorityBunch,
    BunchSort,
    None,
}

impl ClusterMethod {
    pub const ALL: [ClusterMethod; 5] = [
        ClusterMethod::Kmeans,
        ClusterMethod::DtoBunch,
        ClusterMethod::PriorityBunch,
        ClusterMethod::BunchSort,
        ClusterMethod::None,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ClusterMethod::Kmeans => "kmeans",
            ClusterMethod::DtoBunch => "dto-bunch",
            ClusterMethod::PriorityBunch => "priority-bunch",
            ClusterMethod::BunchSort => "bunch-sort",
            ClusterMethod::None => "none",
        }
    }
}

impl std::str::FromStr for ClusterMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::Argument(format!("unknown cluster method {s:?}")))
    }
}

/// Default K-means cluster count: small enough clusters for the exact solver.
pub fn default_k(n_requests: usize) -> usize {
    n_requests.div_ceil(8).max(1)
}

/// Runs `method` over one satellite's requests. Clusters come back ordered
/// by their earliest DTO start; requests inside keep the method's order.
pub fn cluster_requests(
    method: ClusterMethod,
    requests: &[&AcquisitionRequest],
    k: Option<usize>,
    seed: u64,
) -> Result<Vec<Cluster>> {
    if requests.is_empty() {
        return Ok(Vec::new());
    }
    let mut clusters = match method {
        ClusterMethod::Kmeans => {
            let k = k.unwrap_or_else(|| default_k(requests.len())).min(requests.len());
            kmeans(requests, k, 1e-6, 100, seed)?
        }
        ClusterMethod::DtoBunch => dto_bunch(requests),
        ClusterMethod::PriorityBunch => priority_bunch(requests),
        ClusterMethod::BunchSort => bunch_sort(requests),
        ClusterMethod::None => vec![Cluster {
            cluster_id: 0,
            request_ids: sorted_by_dto(requests).iter().map(|r| r.request_id.clone()).collect(),
            centroid: None,
        }],
    };
    if method == ClusterMethod::Kmeans {
        let index: BTreeMap<&str, &AcquisitionRequest> =
            requests.iter().map(|r| (r.request_id.as_str(), *r)).collect();
        for c in &mut clusters {
            c.request_ids.sort_by_key(|id| {
                let r = index[id.as_str()];
                (r.dto_start_ms, r.dto_end_ms, r.request_id.clone())
            });
        }
        clusters.sort_by_key(|c| index[c.request_ids[0].as_str()].dto_start_ms);
        for (i, c) in clusters.iter_mut().enumerate() {
            c.cluster_id = i;
        }
    }
    Ok(clusters)
}

/// Splits clusters into consecutive chunks of at most `max_size` requests.
pub fn split_large(clusters: Vec<Cluster>, max_size: usize) -> Vec<Cluster> {
    let max_size = max_size.max(1);
    let mut out = Vec::new();
    for c in clusters {
        for chunk in c.request_ids.chunks(max_size) {
            out.push(Cluster {
                cluster_id: out.len(),
                request_ids: chunk.to_vec(),
                centroid: c.centroid,
            });
        }
    }
    out
}

fn sorted_by_dto<'a>(requests: &[&'a AcquisitionRequest]) -> Vec<&'a AcquisitionRequest> {
    let mut v = requests.to_vec();
    v.sort_by(|a, b| {
        (a.dto_start_ms, a.dto_end_ms, &a.request_id).cmp(&(b.dto_start_ms, b.dto_end_ms, &b.request_id))
    });
    v
}

fn to_unit(p: &GeoPoint) -> Vec3 {
    geodetic_to_eci(p, REFERENCE_EPOCH_MS).normalized()
}

fn from_unit(v: Vec3) -> GeoPoint {
    eci_to_geodetic(v, REFERENCE_EPOCH_MS)
}

/// Intrinsic (Karcher) mean on the sphere: the point minimizing the sum of
/// squared great-circle distances, refined from the normalized vector sum.
pub fn spherical_mean(points: &[GeoPoint]) -> GeoPoint {
    assert!(!points.is_empty(), "mean of no points");
    let units: Vec<Vec3> = points.iter().map(to_unit).collect();
    let sum = units.iter().fold(Vec3::default(), |acc, u| acc + *u);
    let mut m = if sum.norm() > 1e-12 { sum.normalized() } else { units[0] };
    for _ in 0..100 {
        // mean of the log maps at m
        let mut step = Vec3::default();
        for u in &units {
            let c = m.dot(*u).clamp(-1.0, 1.0);
            let theta = c.acos();
            let perp = *u - m * c;
            let pn = perp.norm();
            if pn > 1e-15 {
                step = step + perp * (theta / pn);
            }
        }
        step = step * (1.0 / units.len() as f64);
        let len = step.norm();
        if len < 1e-15 {
            break;
        }
        m = (m * len.cos() + step * (len.sin() / len)).normalized();
        if len < 1e-13 {
            break;
        }
    }
    from_unit(m)
}

/// Outcome of a K-means run, with diagnostics for tests.
#[derive(Debug, Clone, PartialEq)]
pub struct KMeansRun {
    pub assignment: Vec<usize>,
    pub centroids: Vec<GeoPoint>,
    pub iterations: usize,
    /// Sum of squared great-circle distances (radians²) after each
    /// assignment step.
    pub objective_history: Vec<f64>,
}

fn nearest(p: &GeoPoint, centroids: &[GeoPoint]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (i, c) in centroids.iter().enumerate() {
        let d = central_angle(p, c);
        if d < best.1 {
            best = (i, d);
        }
    }
    best
}

/// Lloyd iterations with great-circle distance.
pub fn kmeans_points(
    points: &[GeoPoint],
    k: usize,
    tol_deg: f64,
    max_iter: usize,
    seed: u64,
) -> Result<KMeansRun> {
    if points.is_empty() {
        return Err(Error::Argument("k-means on empty input".into()));
    }
    if k == 0 || k > points.len() {
        return Err(Error::Argument(format!(
            "k = {k} must be in 1..={}",
            points.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut init = sample(&mut rng, points.len(), k).into_vec();
    init.sort_unstable();
    let mut centroids: Vec<GeoPoint> = init.iter().map(|&i| points[i]).collect();
    let mut assignment = vec![0; points.len()];
    let mut history = Vec::new();
    let mut iterations = 0;

    while iterations < max_iter {
        iterations += 1;
        let mut objective = 0.0;
        for (i, p) in points.iter().enumerate() {
            let (c, d) = nearest(p, &centroids);
            assignment[i] = c;
            objective += d * d;
        }
        history.push(objective);

        let mut members: Vec<Vec<GeoPoint>> = vec![Vec::new(); k];
        for (i, &c) in assignment.iter().enumerate() {
            members[c].push(points[i]);
        }
        let mut updated: Vec<Option<GeoPoint>> = members
            .iter()
            .map(|m| (!m.is_empty()).then(|| spherical_mean(m)))
            .collect();
        // re-seed empty clusters at the point farthest from its nearest centroid
        for j in 0..k {
            if updated[j].is_none() {
                let live: Vec<GeoPoint> = updated.iter().flatten().copied().collect();
                let far = points
                    .iter()
                    .enumerate()
                    .map(|(i, p)| (i, nearest(p, &live).1))
                    .fold((0, -1.0), |best, x| if x.1 > best.1 { x } else { best });
                updated[j] = Some(points[far.0]);
            }
        }
        let updated: Vec<GeoPoint> = updated.into_iter().flatten().collect();
        let shift = centroids
            .iter()
            .zip(&updated)
            .map(|(a, b)| central_angle(a, b).to_degrees())
            .fold(0.0, f64::max);
        centroids = updated;
        if shift < tol_deg {
            break;
        }
    }
    // final assignment against the final centroids
    for (i, p) in points.iter().enumerate() {
        assignment[i] = nearest(p, &centroids).0;
    }
    Ok(KMeansRun {
        assignment,
        centroids,
        iterations,
        objective_history: history,
    })
}

/// Partitions requests by K-means on their median-line centres.
pub fn kmeans(
    requests: &[&AcquisitionRequest],
    k: usize,
    tol_deg: f64,
    max_iter: usize,
    seed: u64,
) -> Result<Vec<Cluster>> {
    let points: Vec<GeoPoint> = requests.iter().map(|r| r.center()).collect();
    let run = kmeans_points(&points, k, tol_deg, max_iter, seed)?;
    let mut clusters: Vec<Cluster> = run
        .centroids
        .iter()
        .enumerate()
        .map(|(i, c)| Cluster {
            cluster_id: i,
            request_ids: Vec::new(),
            centroid: Some(*c),
        })
        .collect();
    for (r, &c) in requests.iter().zip(&run.assignment) {
        clusters[c].request_ids.push(r.request_id.clone());
    }
    clusters.retain(|c| !c.request_ids.is_empty());
    for (i, c) in clusters.iter_mut().enumerate() {
        c.cluster_id = i;
    }
    Ok(clusters)
}

/// Groups requests, in DTO-start order, so that every cluster's windows
/// share a common instant.
pub fn dto_bunch(requests: &[&AcquisitionRequest]) -> Vec<Cluster> {
    let mut clusters: Vec<Cluster> = Vec::new();
    let mut common_end = i64::MIN;
    for r in sorted_by_dto(requests) {
        // sorted by start, so the common interval always begins at r's start
        if !clusters.is_empty() && r.dto_start_ms < common_end {
            common_end = common_end.min(r.dto_end_ms);
            clusters.last_mut().unwrap().request_ids.push(r.request_id.clone());
        } else {
            common_end = r.dto_end_ms;
            clusters.push(Cluster {
                cluster_id: clusters.len(),
                request_ids: vec![r.request_id.clone()],
                centroid: None,
            });
        }
    }
    clusters
}

/// One cluster per present priority, π1 first, each in DTO-start order.
pub fn priority_bunch(requests: &[&AcquisitionRequest]) -> Vec<Cluster> {
    let sorted = sorted_by_dto(requests);
    (1..=4u8)
        .filter_map(|p| {
            let ids: Vec<String> = sorted
                .iter()
                .filter(|r| r.priority == p)
                .map(|r| r.request_id.clone())
                .collect();
            (!ids.is_empty()).then_some(ids)
        })
        .enumerate()
        .map(|(i, ids)| Cluster {
            cluster_id: i,
            request_ids: ids,
            centroid: None,
        })
        .collect()
}

/// DTO bunching, then each cluster sorted by priority and DTO end.
pub fn bunch_sort(requests: &[&AcquisitionRequest]) -> Vec<Cluster> {
    let index: BTreeMap<&str, &AcquisitionRequest> =
        requests.iter().map(|r| (r.request_id.as_str(), *r)).collect();
    let mut clusters = dto_bunch(requests);
    for c in &mut clusters {
        c.request_ids.sort_by_key(|id| {
            let r = index[id.as_str()];
            (r.priority, r.dto_end_ms, r.request_id.clone())
        });
    }
    clusters
}

#[cfg(test)]
mod tests {
    use super::*;

    fn req(id: &str, priority: u8, start: i64, end: i64) -> AcquisitionRequest {
        AcquisitionRequest {
            request_id: id.into(),
            priority,
            dto_start_ms: start,
            dto_end_ms: end,
            median_start: GeoPoint::new(0.0, 0.0),
            median_end: GeoPoint::new(0.0, 0.1),
            satellite_id: "S".into(),
            completed: false,
        }
    }

    #[test]
    fn disjoint_windows_one_cluster_each() {
        let rs = [req("a", 1, 0, 10), req("b", 1, 10, 20), req("c", 1, 30, 40)];
        let refs: Vec<_> = rs.iter().collect();
        assert_eq!(dto_bunch(&refs).len(), 3);
    }

    #[test]
    fn identical_windows_one_cluster() {
        let rs = [req("a", 1, 0, 10), req("b", 2, 0, 10), req("c", 3, 0, 10)];
        let refs: Vec<_> = rs.iter().collect();
        assert_eq!(dto_bunch(&refs).len(), 1);
    }

    #[test]
    fn chain_overlap_is_not_enough() {
        // a overlaps b, b overlaps c, but a and c are disjoint
        let rs = [req("a", 1, 0, 10), req("b", 1, 5, 20), req("c", 1, 12, 30)];
        let refs: Vec<_> = rs.iter().collect();
        let cs = dto_bunch(&refs);
        assert_eq!(cs.len(), 2);
        assert_eq!(cs[0].request_ids, vec!["a", "b"]);
    }

    #[test]
    fn priority_bunches() {
        let same = [req("a", 2, 0, 10), req("b", 2, 5, 10)];
        let refs: Vec<_> = same.iter().collect();
        assert_eq!(priority_bunch(&refs).len(), 1);

        let mixed = [req("d", 4, 0, 10), req("b", 2, 0, 10), req("a", 1, 0, 10), req("c", 3, 0, 10)];
        let refs: Vec<_> = mixed.iter().collect();
        let cs = priority_bunch(&refs);
        let ids: Vec<_> = cs.iter().map(|c| c.request_ids.clone()).collect();
        assert_eq!(ids, vec![vec!["a"], vec!["b"], vec!["c"], vec!["d"]]);
    }

    #[test]
    fn bunch_sort_orders_inside_clusters() {
        let rs = [req("a", 3, 0, 50), req("b", 1, 1, 60), req("c", 3, 2, 40), req("d", 1, 3, 30)];
        let refs: Vec<_> = rs.iter().collect();
        let cs = bunch_sort(&refs);
        assert_eq!(cs.len(), 1);
        assert_eq!(cs[0].request_ids, vec!["d", "b", "c", "a"]);
    }

    #[test]
    fn kmeans_rejects_bad_input() {
        assert!(kmeans_points(&[], 1, 1e-6, 10, 0).is_err());
        let p = [GeoPoint::new(0.0, 0.0)];
        assert!(kmeans_points(&p, 2, 1e-6, 10, 0).is_err());
    }

    #[test]
    fn method_names_round_trip() {
        for m in ClusterMethod::ALL {
            assert_eq!(m.name().parse::<ClusterMethod>().unwrap(), m);
        }
        assert!("nope".parse::<ClusterMethod>().is_err());
    }
}
