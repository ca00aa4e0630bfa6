//! Seeded synthetic datasets.
//!
//! Satellites fly circular near-polar orbits with a 5760 s period (15
//! orbits a day). Requests are dropped near the ground track: a share of
//! them in short bursts along the track, which is what creates contention
//! between overlapping DTO windows, the rest uniformly over the horizon.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{AcquisitionRequest, EphemerisRecord, ProblemInstance};
use crate::error::{Error, Result};
use crate::geometry::{
    self, compute_dto_window, destination, eci_to_geodetic, Ephemeris, Vec3, MU_EARTH_KM3_S2,
    REFERENCE_EPOCH_MS,
};

/// Fractions of priority 1..=4 requests.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PriorityMix(pub [f64; 4]);

impl Default for PriorityMix {
    /// 10% / 20% / 30% / 40%.
    fn default() -> Self {
        Self([0.1, 0.2, 0.3, 0.4])
    }
}

impl PriorityMix {
    fn check(&self) -> Result<()> {
        let sum: f64 = self.0.iter().sum();
        if self.0.iter().any(|p| !(0.0..=1.0).contains(p)) || (sum - 1.0).abs() > 1e-9 {
            return Err(Error::Argument(format!(
                "priority mix {:?} must be non-negative and sum to 1",
                self.0
            )));
        }
        Ok(())
    }

    fn sample(&self, u: f64) -> u8 {
        let mut acc = 0.0;
        for (i, p) in self.0.iter().enumerate() {
            acc += p;
            if u < acc {
                return i as u8 + 1;
            }
        }
        // floating-point shortfall: last priority with non-zero mass
        (self.0.iter().rposition(|p| *p > 0.0).unwrap_or(3) + 1) as u8
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GeneratorConfig {
    pub start_epoch_ms: i64,
    pub horizon_s: i64,
    pub ephemeris_step_s: i64,
    pub orbit_period_s: f64,
    pub inclination_deg: f64,
    /// Share of requests placed in along-track bursts.
    pub burst_fraction: f64,
    /// Burst centres per satellite per day.
    pub bursts_per_day: f64,
    pub burst_sigma_s: f64,
    /// Largest cross-track offset of a request from the ground track.
    pub cross_track_max_deg: f64,
    pub median_length_km: (f64, f64),
    /// Share of requests marked as already completed.
    pub completed_fraction: f64,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        Self {
            start_epoch_ms: REFERENCE_EPOCH_MS,
            horizon_s: 86_400,
            ephemeris_step_s: 10,
            orbit_period_s: geometry::NOMINAL_ORBIT_PERIOD_S,
            inclination_deg: 97.6,
            burst_fraction: 0.6,
            bursts_per_day: 16.0,
            burst_sigma_s: 60.0,
            cross_track_max_deg: 3.5,
            median_length_km: (20.0, 150.0),
            completed_fraction: 0.0,
        }
    }
}

/// Instance with the default generator settings over a 24 h horizon.
pub fn generate_instance(
    n_satellites: usize,
    n_requests: usize,
    priority_mix: &PriorityMix,
    seed: u64,
) -> Result<ProblemInstance> {
    generate_instance_with(
        &GeneratorConfig::default(),
        n_satellites,
        n_requests,
        priority_mix,
        seed,
    )
}

pub fn generate_instance_with(
    config: &GeneratorConfig,
    n_satellites: usize,
    n_requests: usize,
    priority_mix: &PriorityMix,
    seed: u64,
) -> Result<ProblemInstance> {
    if n_satellites == 0 {
        return Err(Error::Argument("need at least one satellite".into()));
    }
    priority_mix.check()?;
    // a request needs a pass fully inside the span
    let margin_s = 1200;
    if config.horizon_s < 2 * margin_s + 60 || config.ephemeris_step_s < 1 {
        return Err(Error::Argument(format!(
            "horizon {} s too short or step {} s invalid",
            config.horizon_s, config.ephemeris_step_s
        )));
    }

    let bursts_ok = (0.0..=1.0).contains(&config.burst_fraction)
        && config.bursts_per_day > 0.0
        && config.bursts_per_day.is_finite()
        && config.burst_sigma_s >= 0.0
        && config.burst_sigma_s.is_finite();
    if !bursts_ok {
        return Err(Error::Argument(format!(
            "burst settings out of range: fraction {}, per day {}, sigma {} s",
            config.burst_fraction, config.bursts_per_day, config.burst_sigma_s
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let satellites: BTreeMap<String, Ephemeris> = (0..n_satellites)
        .map(|i| {
            let id = format!("SAT-{}", i + 1);
            (id, orbit_ephemeris(config, i, n_satellites))
        })
        .collect();
    let ids: Vec<&String> = satellites.keys().collect();

    let horizon_ms = config.horizon_s * 1000;
    let start = config.start_epoch_ms;
    let n_bursts = ((config.bursts_per_day * config.horizon_s as f64 / 86_400.0).ceil() as usize)
        .max(1);
    let bursts: Vec<Vec<i64>> = ids
        .iter()
        .map(|_| {
            (0..n_bursts)
                .map(|_| start + margin_s * 1000 + rng.random_range(0..horizon_ms - 2 * margin_s * 1000))
                .collect()
        })
        .collect();
    let jitter = Normal::new(0.0, config.burst_sigma_s * 1000.0).expect("finite sigma");

    let width = n_requests.max(1).to_string().len().max(5);
    let mut requests = Vec::with_capacity(n_requests);
    for k in 0..n_requests {
        let sat = rng.random_range(0..ids.len());
        let eph = &satellites[ids[sat]];
        let priority = priority_mix.sample(rng.random::<f64>());
        let completed = rng.random::<f64>() < config.completed_fraction;
        let lo = start + margin_s * 1000;
        let hi = start + horizon_ms - margin_s * 1000;
        // resample until the pass admits the acquisition
        let request = loop {
            let t0 = if rng.random::<f64>() < config.burst_fraction {
                let c = bursts[sat][rng.random_range(0..n_bursts)];
                (c + jitter.sample(&mut rng) as i64).clamp(lo, hi)
            } else {
                rng.random_range(lo..hi)
            };
            let state = eph.interpolate_state(t0)?;
            let sub = eci_to_geodetic(state.position_eci_km, t0);
            let track = track_bearing(eph, t0)?;
            let offset_deg = rng.random_range(-config.cross_track_max_deg..config.cross_track_max_deg);
            let center = destination(
                &sub,
                track + 90.0,
                offset_deg.to_radians() * geometry::EARTH_RADIUS_KM,
            );
            let length = rng.random_range(config.median_length_km.0..config.median_length_km.1);
            let bearing = track + rng.random_range(-20.0..20.0);
            let median_start = destination(&center, bearing + 180.0, length / 2.0);
            let median_end = destination(&center, bearing, length / 2.0);
            let mid = geometry::midpoint(&median_start, &median_end);
            let Ok(window) = compute_dto_window(&mid, eph, Some((t0 - 900_000, t0 + 900_000)))
            else {
                continue;
            };
            // whole-second DTO bounds, inside the 45 deg region
            let dto_start_ms = ceil_to_second(window.start_ms, start);
            let dto_end_ms = floor_to_second(window.end_ms, start);
            let tau = geometry::acquisition_duration(&median_start, &median_end);
            if dto_end_ms - dto_start_ms < tau + 2000 {
                continue;
            }
            break AcquisitionRequest {
                request_id: format!("REQ-{:0width$}", k + 1),
                priority,
                dto_start_ms,
                dto_end_ms,
                median_start,
                median_end,
                satellite_id: ids[sat].clone(),
                completed,
            };
        };
        requests.push(request);
    }
    ProblemInstance::new(satellites, requests)
}

fn ceil_to_second(t: i64, anchor: i64) -> i64 {
    anchor + (t - anchor + 999).div_euclid(1000) * 1000
}

fn floor_to_second(t: i64, anchor: i64) -> i64 {
    anchor + (t - anchor).div_euclid(1000) * 1000
}

/// Ground-track bearing (degrees from north) at `t`.
fn track_bearing(eph: &Ephemeris, t: i64) -> Result<f64> {
    let (_, end) = eph.span();
    let (a, b) = if t + 1000 <= end { (t, t + 1000) } else { (t - 1000, t) };
    let pa = eci_to_geodetic(eph.interpolate_state(a)?.position_eci_km, a);
    let pb = eci_to_geodetic(eph.interpolate_state(b)?.position_eci_km, b);
    let (la1, la2) = (pa.latitude_deg.to_radians(), pb.latitude_deg.to_radians());
    let dlon = (pb.longitude_deg - pa.longitude_deg).to_radians();
    let y = dlon.sin() * la2.cos();
    let x = la1.cos() * la2.sin() - la1.sin() * la2.cos() * dlon.cos();
    Ok(y.atan2(x).to_degrees())
}

/// Circular orbit sampled every `ephemeris_step_s`. Satellites share one
/// plane, spread evenly in phase.
fn orbit_ephemeris(config: &GeneratorConfig, index: usize, count: usize) -> Ephemeris {
    let period = config.orbit_period_s;
    let a = (MU_EARTH_KM3_S2 * period * period / (4.0 * std::f64::consts::PI.powi(2))).cbrt();
    let n = std::f64::consts::TAU / period;
    let inc = config.inclination_deg.to_radians();
    let raan = 90f64.to_radians();
    let p = Vec3::new(raan.cos(), raan.sin(), 0.0);
    let q = Vec3::new(-inc.cos() * raan.sin(), inc.cos() * raan.cos(), inc.sin());
    let phase = std::f64::consts::TAU * index as f64 / count as f64;
    let steps = config.horizon_s / config.ephemeris_step_s;
    let records = (0..=steps)
        .map(|k| {
            let t = (k * config.ephemeris_step_s) as f64;
            let u = phase + n * t;
            let (su, cu) = u.sin_cos();
            let pos = (p * cu + q * su) * a;
            let vel = (p * -su + q * cu) * (a * n);
            EphemerisRecord {
                orbit_number: (u / std::f64::consts::TAU).floor() as u32,
                timestamp_ms: config.start_epoch_ms + k * config.ephemeris_step_s * 1000,
                position_eci_km: pos.to_array(),
                velocity_eci_km_s: vel.to_array(),
            }
        })
        .collect();
    Ephemeris::from_sorted(records).expect("generated timestamps increase")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> GeneratorConfig {
        GeneratorConfig {
            horizon_s: 3 * 3600,
            ..GeneratorConfig::default()
        }
    }

    #[test]
    fn no_requests() {
        let inst = generate_instance_with(&small(), 1, 0, &PriorityMix::default(), 3).unwrap();
        assert_eq!(inst.satellites.len(), 1);
        assert!(inst.requests.is_empty());
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(generate_instance_with(&small(), 0, 1, &PriorityMix::default(), 1).is_err());
        let mix = PriorityMix([0.5, 0.5, 0.5, 0.0]);
        assert!(generate_instance_with(&small(), 1, 1, &mix, 1).is_err());
    }

    #[test]
    fn orbit_radius_in_leo_band() {
        let inst = generate_instance_with(&small(), 2, 0, &PriorityMix::default(), 3).unwrap();
        for eph in inst.satellites.values() {
            for r in eph.records() {
                let n = Vec3::from_array(r.position_eci_km).norm();
                assert!((6371.0 + 400.0..=6371.0 + 2000.0).contains(&n));
            }
        }
    }

    #[test]
    fn fifteen_orbits_per_day() {
        let inst = generate_instance(1, 0, &PriorityMix::default(), 0).unwrap();
        let eph = &inst.satellites["SAT-1"];
        let last = eph.records().last().unwrap();
        assert_eq!(last.orbit_number, 15);
    }

    #[test]
    fn priority_sampling_covers_mix() {
        let mix = PriorityMix::default();
        assert_eq!(mix.sample(0.05), 1);
        assert_eq!(mix.sample(0.15), 2);
        assert_eq!(mix.sample(0.45), 3);
        assert_eq!(mix.sample(0.99), 4);
        assert_eq!(PriorityMix([0.0, 1.0, 0.0, 0.0]).sample(1.0), 2);
    }
}
