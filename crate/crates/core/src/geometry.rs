//! Spherical-Earth kinematics.
//!
//! The Earth is a sphere of radius [`EARTH_RADIUS_KM`] rotating at the
//! sidereal rate about the inertial z axis. At [`REFERENCE_EPOCH_MS`] the
//! Greenwich meridian lies on the inertial x axis.
//!
//! Attitudes are expressed in the local orbital frame of the satellite:
//! `z` toward nadir, `x` along the velocity (orthogonalized against `z`),
//! `y = z × x`. A boresight with local components `(bx, by, bz)` has
//! `pitch = asin(bx)` and `roll = atan2(by, bz)`; yaw is always zero.

use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{AcquisitionRequest, EphemerisRecord, GeoPoint};

pub const EARTH_RADIUS_KM: f64 = 6371.0;
pub const SIDEREAL_DAY_S: f64 = 86164.0;
/// 2023-01-01T00:00:00Z.
pub const REFERENCE_EPOCH_MS: i64 = 1_672_531_200_000;
pub const SLEW_RATE_DEG_S: f64 = 1.0;
pub const MAX_DEPOINTING_DEG: f64 = 45.0;
/// Orbital period used for ground-track speed (15 orbits in 24 h).
pub const NOMINAL_ORBIT_PERIOD_S: f64 = 5760.0;
pub const MU_EARTH_KM3_S2: f64 = 398_600.4418;

/// Durations within this many degrees of a whole second are not rounded up.
const CEIL_TOLERANCE_DEG: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn from_array(a: [f64; 3]) -> Self {
        Self::new(a[0], a[1], a[2])
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn dot(self, o: Self) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn cross(self, o: Self) -> Self {
        Self::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn normalized(self) -> Self {
        self * (1.0 / self.norm())
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
}

impl Add for Vec3 {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl Sub for Vec3 {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Self;
    fn mul(self, k: f64) -> Self {
        Self::new(self.x * k, self.y * k, self.z * k)
    }
}

impl Neg for Vec3 {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.x, -self.y, -self.z)
    }
}

/// Angle between two vectors in degrees, robust near 0 and 180.
pub fn angle_between_deg(a: Vec3, b: Vec3) -> f64 {
    a.cross(b).norm().atan2(a.dot(b)).to_degrees()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SatelliteState {
    pub timestamp_ms: i64,
    pub position_eci_km: Vec3,
    pub velocity_eci_km_s: Vec3,
}

impl SatelliteState {
    /// Unit vectors `(x, y, z)` of the local orbital frame.
    pub fn local_frame(&self) -> (Vec3, Vec3, Vec3) {
        let z = (-self.position_eci_km).normalized();
        let v = self.velocity_eci_km_s;
        let x = (v - z * v.dot(z)).normalized();
        let y = z.cross(x);
        (x, y, z)
    }

    pub fn to_local(&self, eci_direction: Vec3) -> Vec3 {
        let (x, y, z) = self.local_frame();
        Vec3::new(eci_direction.dot(x), eci_direction.dot(y), eci_direction.dot(z))
    }

    pub fn to_eci(&self, local: Vec3) -> Vec3 {
        let (x, y, z) = self.local_frame();
        x * local.x + y * local.y + z * local.z
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Attitude {
    pub roll_deg: f64,
    pub pitch_deg: f64,
    pub yaw_deg: f64,
}

impl Attitude {
    pub fn nadir() -> Self {
        Self::default()
    }

    /// Boresight unit vector in the local orbital frame.
    pub fn boresight(&self) -> Vec3 {
        let (sr, cr) = self.roll_deg.to_radians().sin_cos();
        let (sp, cp) = self.pitch_deg.to_radians().sin_cos();
        Vec3::new(sp, cp * sr, cp * cr)
    }

    pub fn from_boresight(local: Vec3) -> Self {
        let b = local.normalized();
        let pitch = b.x.clamp(-1.0, 1.0).asin().to_degrees();
        let mut roll = b.y.atan2(b.z).to_degrees();
        if roll <= -180.0 {
            roll += 360.0;
        }
        Self {
            roll_deg: roll,
            pitch_deg: pitch,
            yaw_deg: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DtoWindow {
    pub start_ms: i64,
    pub end_ms: i64,
}

impl DtoWindow {
    pub fn duration_ms(&self) -> i64 {
        self.end_ms - self.start_ms
    }
}

/// Earth rotation angle in radians at `timestamp_ms`.
pub fn earth_rotation_angle(timestamp_ms: i64) -> f64 {
    let dt_s = (timestamp_ms - REFERENCE_EPOCH_MS) as f64 / 1000.0;
    std::f64::consts::TAU * dt_s / SIDEREAL_DAY_S
}

pub fn geodetic_to_eci(point: &GeoPoint, timestamp_ms: i64) -> Vec3 {
    let lat = point.latitude_deg.to_radians();
    let lon = point.longitude_deg.to_radians() + earth_rotation_angle(timestamp_ms);
    let (slat, clat) = lat.sin_cos();
    let (slon, clon) = lon.sin_cos();
    Vec3::new(clat * clon, clat * slon, slat) * EARTH_RADIUS_KM
}

/// Geographic point directly below an ECI position.
pub fn eci_to_geodetic(position: Vec3, timestamp_ms: i64) -> GeoPoint {
    let lat = position.z.atan2((position.x * position.x + position.y * position.y).sqrt());
    let lon = position.y.atan2(position.x) - earth_rotation_angle(timestamp_ms);
    GeoPoint::new(lat.to_degrees(), lon.to_degrees())
}

/// Central angle between two points in radians (haversine).
pub fn central_angle(a: &GeoPoint, b: &GeoPoint) -> f64 {
    let (la1, la2) = (a.latitude_deg.to_radians(), b.latitude_deg.to_radians());
    let dlat = la2 - la1;
    let dlon = (b.longitude_deg - a.longitude_deg).to_radians();
    let h = (dlat / 2.0).sin().powi(2) + la1.cos() * la2.cos() * (dlon / 2.0).sin().powi(2);
    2.0 * h.sqrt().min(1.0).asin()
}

pub fn great_circle_km(a: &GeoPoint, b: &GeoPoint) -> f64 {
    central_angle(a, b) * EARTH_RADIUS_KM
}

/// Great-circle midpoint of two points.
pub fn midpoint(a: &GeoPoint, b: &GeoPoint) -> GeoPoint {
    let va = geodetic_to_eci(a, REFERENCE_EPOCH_MS);
    let vb = geodetic_to_eci(b, REFERENCE_EPOCH_MS);
    let m = va + vb;
    if m.norm() < 1e-9 {
        return *a;
    }
    eci_to_geodetic(m, REFERENCE_EPOCH_MS)
}

/// Point reached by travelling `distance_km` from `start` along `bearing_deg`.
pub fn destination(start: &GeoPoint, bearing_deg: f64, distance_km: f64) -> GeoPoint {
    let d = distance_km / EARTH_RADIUS_KM;
    let lat1 = start.latitude_deg.to_radians();
    let lon1 = start.longitude_deg.to_radians();
    let brg = bearing_deg.to_radians();
    let lat2 = (lat1.sin() * d.cos() + lat1.cos() * d.sin() * brg.cos()).asin();
    let lon2 = lon1 + (brg.sin() * d.sin() * lat1.cos()).atan2(d.cos() - lat1.sin() * lat2.sin());
    GeoPoint::new(lat2.to_degrees(), lon2.to_degrees())
}

/// Time-ordered ephemeris of one satellite.
#[derive(Debug, Clone, PartialEq)]
pub struct Ephemeris {
    records: Vec<EphemerisRecord>,
}

impl Ephemeris {
    /// Sorts the records by timestamp; rejects empty input and duplicate
    /// timestamps.
    pub fn new(mut records: Vec<EphemerisRecord>) -> Result<Self> {
        if records.is_empty() {
            return Err(Error::Data("empty ephemeris".into()));
        }
        records.sort_by_key(|r| r.timestamp_ms);
        Self::from_sorted(records)
    }

    /// Rejects records that are not strictly increasing in time.
    pub fn from_sorted(records: Vec<EphemerisRecord>) -> Result<Self> {
        if records.is_empty() {
            return Err(Error::Data("empty ephemeris".into()));
        }
        if let Some(w) = records.windows(2).find(|w| w[1].timestamp_ms <= w[0].timestamp_ms) {
            return Err(Error::Data(format!(
                "ephemeris timestamps not strictly increasing at {} -> {}",
                w[0].timestamp_ms, w[1].timestamp_ms
            )));
        }
        Ok(Self { records })
    }

    pub fn records(&self) -> &[EphemerisRecord] {
        &self.records
    }

    pub fn span(&self) -> (i64, i64) {
        (
            self.records[0].timestamp_ms,
            self.records[self.records.len() - 1].timestamp_ms,
        )
    }

    pub fn contains(&self, timestamp_ms: i64) -> bool {
        let (a, b) = self.span();
        (a..=b).contains(&timestamp_ms)
    }

    /// Linear interpolation of position and velocity between the bracketing
    /// records.
    pub fn interpolate_state(&self, timestamp_ms: i64) -> Result<SatelliteState> {
        let (start_ms, end_ms) = self.span();
        if timestamp_ms < start_ms || timestamp_ms > end_ms {
            return Err(Error::OutOfRange {
                timestamp_ms,
                start_ms,
                end_ms,
            });
        }
        let i = self.records.partition_point(|r| r.timestamp_ms <= timestamp_ms) - 1;
        let a = &self.records[i];
        if a.timestamp_ms == timestamp_ms || i + 1 == self.records.len() {
            return Ok(SatelliteState {
                timestamp_ms,
                position_eci_km: Vec3::from_array(a.position_eci_km),
                velocity_eci_km_s: Vec3::from_array(a.velocity_eci_km_s),
            });
        }
        let b = &self.records[i + 1];
        let w = (timestamp_ms - a.timestamp_ms) as f64 / (b.timestamp_ms - a.timestamp_ms) as f64;
        let lerp = |p: [f64; 3], q: [f64; 3]| {
            Vec3::new(
                p[0] + (q[0] - p[0]) * w,
                p[1] + (q[1] - p[1]) * w,
                p[2] + (q[2] - p[2]) * w,
            )
        };
        Ok(SatelliteState {
            timestamp_ms,
            position_eci_km: lerp(a.position_eci_km, b.position_eci_km),
            velocity_eci_km_s: lerp(a.velocity_eci_km_s, b.velocity_eci_km_s),
        })
    }
}

/// Attitude that points the boresight from the satellite at `target`.
pub fn attitude_pointing(state: &SatelliteState, target: &GeoPoint, timestamp_ms: i64) -> Attitude {
    let t = geodetic_to_eci(target, timestamp_ms);
    Attitude::from_boresight(state.to_local(t - state.position_eci_km))
}

/// Angle between nadir and the line of sight to `target`, in degrees.
pub fn depointing_deg(state: &SatelliteState, target: &GeoPoint, timestamp_ms: i64) -> f64 {
    let t = geodetic_to_eci(target, timestamp_ms);
    angle_between_deg(-state.position_eci_km, t - state.position_eci_km)
}

/// Angle between the boresights implied by two attitudes, in `[0, 180]`.
pub fn angular_separation(a1: &Attitude, a2: &Attitude) -> f64 {
    angle_between_deg(a1.boresight(), a2.boresight())
}

/// Whole seconds needed to slew between two attitudes, rounded up.
pub fn maneuver_duration(a1: &Attitude, a2: &Attitude) -> i64 {
    let seconds = angular_separation(a1, a2) / SLEW_RATE_DEG_S;
    (seconds - CEIL_TOLERANCE_DEG).ceil().max(0.0) as i64
}

/// Acquisition time for a median line: its length over the ground-track
/// speed, never below one second.
pub fn acquisition_duration(median_start: &GeoPoint, median_end: &GeoPoint) -> i64 {
    // length / (R * 2π / T); the radius cancels
    let seconds = central_angle(median_start, median_end) * NOMINAL_ORBIT_PERIOD_S
        / std::f64::consts::TAU;
    ((seconds * 1000.0).round() as i64).max(1000)
}

/// Largest central angle (degrees) between the sub-satellite point and a
/// target that keeps depointing within `MAX_DEPOINTING_DEG` at orbit radius
/// `radius_km`.
pub fn max_central_angle_deg(radius_km: f64) -> f64 {
    let eta = MAX_DEPOINTING_DEG.to_radians();
    let s = (radius_km / EARTH_RADIUS_KM * eta.sin()).min(1.0);
    (s.asin() - eta).to_degrees()
}

/// Data-take opportunity for `target`: the first contiguous interval within
/// `search` (default: the whole ephemeris) where depointing stays within
/// 45°. Found by a 1 s scan, endpoints refined by bisection to 1 ms.
pub fn compute_dto_window(
    target: &GeoPoint,
    ephemeris: &Ephemeris,
    search: Option<(i64, i64)>,
) -> Result<DtoWindow> {
    let (span_a, span_b) = ephemeris.span();
    let (a, b) = search.unwrap_or((span_a, span_b));
    let (a, b) = (a.max(span_a), b.min(span_b));
    if a >= b {
        return Err(Error::NoOpportunity("empty search interval".into()));
    }
    let depoint = |t: i64| -> f64 {
        let s = ephemeris.interpolate_state(t).expect("in span");
        depointing_deg(&s, target, t)
    };
    let inside = |t: i64| depoint(t) <= MAX_DEPOINTING_DEG;

    // Coarse screen: a 1 s sample can only be inside if the sub-satellite
    // point is close enough to the target. The central angle changes at a
    // bounded rate, so whole coarse segments can be ruled out.
    const COARSE_MS: i64 = 20_000;
    let mut candidate_ranges: Vec<(i64, i64)> = Vec::new();
    let mut t = a;
    while t <= b {
        let s = ephemeris.interpolate_state(t)?;
        let sub = eci_to_geodetic(s.position_eci_km, t);
        let ca = central_angle(&sub, target).to_degrees();
        let r = s.position_eci_km.norm();
        let rate_deg_s = (s.velocity_eci_km_s.norm() / r
            + std::f64::consts::TAU / SIDEREAL_DAY_S)
            .to_degrees()
            * 1.5;
        let slack = rate_deg_s * COARSE_MS as f64 / 1000.0 + 0.5;
        if ca <= max_central_angle_deg(r) + slack {
            let lo = (t - COARSE_MS).max(a);
            let hi = (t + COARSE_MS).min(b);
            match candidate_ranges.last_mut() {
                Some(last) if lo <= last.1 => last.1 = hi,
                _ => candidate_ranges.push((lo, hi)),
            }
        }
        t += COARSE_MS;
    }

    for (lo, hi) in candidate_ranges {
        // 1 s lattice anchored at the search start
        let mut k = (lo - a + 999) / 1000;
        let mut prev: Option<i64> = None;
        while a + k * 1000 <= hi {
            let t = a + k * 1000;
            if inside(t) {
                let start = match prev {
                    Some(p) => bisect(p, t, &inside, true),
                    None if t - 1000 >= a && !inside(t - 1000) => {
                        bisect(t - 1000, t, &inside, true)
                    }
                    None => t,
                };
                // walk forward to the first outside sample
                let mut u = t;
                loop {
                    let next = u + 1000;
                    if next > b {
                        let end = b;
                        return finish(start, end, target);
                    }
                    if !inside(next) {
                        let end = bisect(u, next, &inside, false);
                        return finish(start, end, target);
                    }
                    u = next;
                }
            }
            prev = Some(t);
            k += 1;
        }
    }
    Err(Error::NoOpportunity(format!(
        "target ({:.4}, {:.4}) never within {MAX_DEPOINTING_DEG} deg in [{a}, {b}]",
        target.latitude_deg, target.longitude_deg
    )))
}

fn finish(start: i64, end: i64, target: &GeoPoint) -> Result<DtoWindow> {
    if start < end {
        Ok(DtoWindow {
            start_ms: start,
            end_ms: end,
        })
    } else {
        Err(Error::NoOpportunity(format!(
            "degenerate window for ({:.4}, {:.4})",
            target.latitude_deg, target.longitude_deg
        )))
    }
}

/// Millisecond bisection between an outside and an inside sample. With
/// `rising`, `lo` is outside and the first inside millisecond is returned;
/// otherwise `lo` is inside and the last inside millisecond is returned.
fn bisect(mut lo: i64, mut hi: i64, inside: &impl Fn(i64) -> bool, rising: bool) -> i64 {
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if inside(mid) == rising {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    if rising {
        hi
    } else {
        lo
    }
}

/// DTO window of a request, measured to the midpoint of its median line.
pub fn request_dto_window(
    request: &AcquisitionRequest,
    ephemeris: &Ephemeris,
    search: Option<(i64, i64)>,
) -> Result<DtoWindow> {
    compute_dto_window(&request.center(), ephemeris, search)
}

/// Attitude at the start of acquiring `request` at `start_ms`.
pub fn start_attitude(
    request: &AcquisitionRequest,
    ephemeris: &Ephemeris,
    start_ms: i64,
) -> Result<Attitude> {
    let s = ephemeris.interpolate_state(start_ms)?;
    Ok(attitude_pointing(&s, &request.median_start, start_ms))
}

/// Attitude at the end of acquiring `request`, at `end_ms`.
pub fn end_attitude(
    request: &AcquisitionRequest,
    ephemeris: &Ephemeris,
    end_ms: i64,
) -> Result<Attitude> {
    let s = ephemeris.interpolate_state(end_ms)?;
    Ok(attitude_pointing(&s, &request.median_end, end_ms))
}

/// Minimum relay (whole seconds) from an attitude held at `t0_ms` to the
/// start of `next`.
///
/// Starting from one second, tests whether the slew to `next`'s start
/// attitude, evaluated at the candidate arrival time, fits in the candidate
/// duration, increasing by one second until it does or until the arrival
/// no longer leaves room for the full acquisition inside `next`'s DTO.
pub fn min_relay_from(
    t0_ms: i64,
    from: &Attitude,
    next: &AcquisitionRequest,
    ephemeris: &Ephemeris,
) -> Option<i64> {
    relay_search(t0_ms, from, next, ephemeris, Some(next.dto_end_ms))
}

fn relay_search(
    t0_ms: i64,
    from: &Attitude,
    next: &AcquisitionRequest,
    ephemeris: &Ephemeris,
    deadline_ms: Option<i64>,
) -> Option<i64> {
    let tau = next.acquisition_duration_ms();
    let (_, span_end) = ephemeris.span();
    let mut d: i64 = 1;
    loop {
        let arrival = t0_ms + d * 1000;
        if let Some(deadline) = deadline_ms {
            if arrival + tau > deadline {
                return None;
            }
        }
        if arrival > span_end {
            return None;
        }
        let to = start_attitude(next, ephemeris, arrival).ok()?;
        if maneuver_duration(from, &to) <= d {
            return Some(d);
        }
        // A slew never needs more than 180 s at 1 deg/s; bail out well past it.
        if deadline_ms.is_none() && d > 400 {
            return None;
        }
        d += 1;
    }
}

/// Minimum relaying time `t_min` from the end of `f1`'s acquisition at
/// `t_end_ms` to the start of `f2`, or `None` when `f2`'s DTO closes first.
pub fn min_relay_time(
    t_end_ms: i64,
    f1: &AcquisitionRequest,
    f2: &AcquisitionRequest,
    ephemeris: &Ephemeris,
) -> Option<i64> {
    let from = end_attitude(f1, ephemeris, t_end_ms).ok()?;
    min_relay_from(t_end_ms, &from, f2, ephemeris)
}

/// Relay ignoring `f2`'s DTO deadline, for deficit reporting.
pub(crate) fn unconstrained_relay(
    t_end_ms: i64,
    from: &Attitude,
    f2: &AcquisitionRequest,
    ephemeris: &Ephemeris,
) -> Option<i64> {
    relay_search(t_end_ms, from, f2, ephemeris, None)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn circular_ephemeris(start_ms: i64, seconds: i64, step_s: i64) -> Ephemeris {
        let a = (MU_EARTH_KM3_S2 * NOMINAL_ORBIT_PERIOD_S.powi(2)
            / (4.0 * std::f64::consts::PI.powi(2)))
        .cbrt();
        let n = std::f64::consts::TAU / NOMINAL_ORBIT_PERIOD_S;
        let inc = 97.6f64.to_radians();
        let p = Vec3::new(1.0, 0.0, 0.0);
        let q = Vec3::new(0.0, inc.cos(), inc.sin());
        let records = (0..=seconds / step_s)
            .map(|k| {
                let t = (k * step_s) as f64;
                let (su, cu) = (n * t).sin_cos();
                EphemerisRecord {
                    orbit_number: 0,
                    timestamp_ms: start_ms + k * step_s * 1000,
                    position_eci_km: (p * cu + q * su).to_array().map(|c| c * a),
                    velocity_eci_km_s: (p * -su + q * cu).to_array().map(|c| c * a * n),
                }
            })
            .collect();
        Ephemeris::new(records).unwrap()
    }

    #[test]
    fn eci_alignment_and_pole() {
        let v = geodetic_to_eci(&GeoPoint::new(0.0, 0.0), REFERENCE_EPOCH_MS);
        assert!((v.x - 6371.0).abs() < 1e-9 && v.y.abs() < 1e-9 && v.z.abs() < 1e-9);
        for lon in [-170.0, 0.0, 33.0, 120.0] {
            for t in [REFERENCE_EPOCH_MS, REFERENCE_EPOCH_MS + 12_345_678] {
                let v = geodetic_to_eci(&GeoPoint::new(90.0, lon), t);
                assert!(v.x.abs() < 1e-9 && v.y.abs() < 1e-9);
                assert!((v.z - 6371.0).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn eci_matches_trig_oracle_at_45_45() {
        // closed form: R(cos45 cos45, cos45 sin45, sin45) = R(1/2, 1/2, sqrt(2)/2)
        let v = geodetic_to_eci(&GeoPoint::new(45.0, 45.0), REFERENCE_EPOCH_MS);
        let r = 6371.0;
        assert!((v.x - r * 0.5).abs() < 1e-9);
        assert!((v.y - r * 0.5).abs() < 1e-9);
        assert!((v.z - r * std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-9);
    }

    #[test]
    fn earth_rotation_moves_longitude() {
        // a quarter sidereal day turns Greenwich onto the inertial y axis
        let t = REFERENCE_EPOCH_MS + (SIDEREAL_DAY_S * 250.0) as i64;
        let v = geodetic_to_eci(&GeoPoint::new(0.0, 0.0), t);
        assert!(v.x.abs() < 1e-6 && (v.y - 6371.0).abs() < 1e-6);
        let back = eci_to_geodetic(v, t);
        assert!(back.longitude_deg.abs() < 1e-9);
    }

    #[test]
    fn interpolation_exact_and_midpoint() {
        let eph = circular_ephemeris(REFERENCE_EPOCH_MS, 600, 60);
        let r = eph.records()[3];
        let s = eph.interpolate_state(r.timestamp_ms).unwrap();
        assert_eq!(s.position_eci_km.to_array(), r.position_eci_km);
        let (a, b) = (eph.records()[4], eph.records()[5]);
        let mid = eph.interpolate_state((a.timestamp_ms + b.timestamp_ms) / 2).unwrap();
        for i in 0..3 {
            let m = (a.position_eci_km[i] + b.position_eci_km[i]) / 2.0;
            assert!((mid.position_eci_km.to_array()[i] - m).abs() < 1e-9);
        }
        assert!(matches!(
            eph.interpolate_state(REFERENCE_EPOCH_MS - 1),
            Err(Error::OutOfRange { .. })
        ));
    }

    #[test]
    fn nadir_and_cross_track_attitudes() {
        let eph = circular_ephemeris(REFERENCE_EPOCH_MS, 600, 10);
        let t = REFERENCE_EPOCH_MS + 123_000;
        let s = eph.interpolate_state(t).unwrap();
        let sub = eci_to_geodetic(s.position_eci_km, t);
        let att = attitude_pointing(&s, &sub, t);
        assert!(att.roll_deg.abs() < 1e-9 && att.pitch_deg.abs() < 1e-9);

        // rotate the sub-satellite direction toward -h (the +y side) by 3 deg
        let rhat = s.position_eci_km.normalized();
        let h = s.position_eci_km.cross(s.velocity_eci_km_s).normalized();
        let lam = 3f64.to_radians();
        let dir = rhat * lam.cos() - h * lam.sin();
        let target = eci_to_geodetic(dir * EARTH_RADIUS_KM, t);
        let att = attitude_pointing(&s, &target, t);
        let dep = depointing_deg(&s, &target, t);
        assert!(att.pitch_deg.abs() < 1e-6, "pitch {}", att.pitch_deg);
        assert!((att.roll_deg - dep).abs() < 1e-6);
        assert!(att.roll_deg > 0.0);
    }

    #[test]
    fn boresight_round_trip() {
        let eph = circular_ephemeris(REFERENCE_EPOCH_MS, 600, 10);
        let t = REFERENCE_EPOCH_MS + 77_000;
        let s = eph.interpolate_state(t).unwrap();
        for (lat, lon) in [(10.0, 20.0), (-5.0, 3.0), (40.0, -60.0)] {
            let target = GeoPoint::new(lat, lon);
            let att = attitude_pointing(&s, &target, t);
            let reconstructed = s.to_eci(att.boresight());
            let direct = (geodetic_to_eci(&target, t) - s.position_eci_km).normalized();
            assert!((reconstructed - direct).norm() < 1e-9);
        }
    }

    #[test]
    fn maneuver_rounding() {
        let a = Attitude::nadir();
        assert_eq!(maneuver_duration(&a, &a), 0);
        let b = Attitude {
            roll_deg: 90.0,
            ..Attitude::default()
        };
        assert_eq!(maneuver_duration(&a, &b), 90);
        let c = Attitude {
            pitch_deg: 30.2,
            ..Attitude::default()
        };
        assert_eq!(maneuver_duration(&a, &c), 31);
    }

    #[test]
    fn acquisition_floor_and_scale() {
        let p = GeoPoint::new(10.0, 10.0);
        assert_eq!(acquisition_duration(&p, &p), 1000);
        // 10 s of ground track is 10/5760 of a great circle
        let angle = 360.0 * 10.0 / NOMINAL_ORBIT_PERIOD_S;
        let q = GeoPoint::new(0.0, 0.0);
        let r = GeoPoint::new(0.0, angle);
        assert_eq!(acquisition_duration(&q, &r), 10_000);
    }

    #[test]
    fn dto_window_on_ground_track_is_symmetric() {
        let eph = circular_ephemeris(REFERENCE_EPOCH_MS, 1800, 10);
        let apex = REFERENCE_EPOCH_MS + 900_000;
        let s = eph.interpolate_state(apex).unwrap();
        let target = eci_to_geodetic(s.position_eci_km, apex);
        let w = compute_dto_window(&target, &eph, None).unwrap();
        let before = apex - w.start_ms;
        let after = w.end_ms - apex;
        assert!((before - after).abs() <= 2000, "{before} vs {after}");
        for t in [w.start_ms, w.end_ms] {
            let s = eph.interpolate_state(t).unwrap();
            assert!((depointing_deg(&s, &target, t) - 45.0).abs() < 0.01);
        }
    }

    #[test]
    fn dto_window_antipode_has_no_opportunity() {
        let eph = circular_ephemeris(REFERENCE_EPOCH_MS, 1200, 10);
        let t = REFERENCE_EPOCH_MS + 600_000;
        let s = eph.interpolate_state(t).unwrap();
        let target = eci_to_geodetic(-s.position_eci_km, t);
        assert!(matches!(
            compute_dto_window(&target, &eph, None),
            Err(Error::NoOpportunity(_))
        ));
    }
}
