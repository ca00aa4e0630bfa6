//! Domain types shared by every planner: requests, ephemerides, plans.

mod generate;
mod io;
mod validate;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{self, Attitude, Ephemeris};

pub use generate::{generate_instance, generate_instance_with, GeneratorConfig, PriorityMix};
pub use io::{
    parse_ephemeris, parse_ephemeris_str, parse_plan_str, parse_requests, parse_requests_str,
    serialize_ephemeris, serialize_plan, serialize_requests, write_ephemeris, write_plan,
    write_requests,
};
pub use validate::{validate_plan, ValidationReport, Violation};

/// A point on the spherical Earth.
///
/// Longitude is normalized into `[-180, 180)` on construction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeoPoint {
    #[serde(rename = "lat")]
    pub latitude_deg: f64,
    #[serde(rename = "lon")]
    pub longitude_deg: f64,
}

impl GeoPoint {
    /// Panics if the latitude is outside `[-90, 90]` or either value is not finite.
    pub fn new(latitude_deg: f64, longitude_deg: f64) -> Self {
        Self::try_new(latitude_deg, longitude_deg).expect("invalid geographic point")
    }

    pub fn try_new(latitude_deg: f64, longitude_deg: f64) -> Result<Self> {
        if !latitude_deg.is_finite() || !longitude_deg.is_finite() {
            return Err(Error::Data(format!(
                "non-finite coordinate ({latitude_deg}, {longitude_deg})"
            )));
        }
        if !(-90.0..=90.0).contains(&latitude_deg) {
            return Err(Error::Data(format!("latitude {latitude_deg} outside [-90, 90]")));
        }
        Ok(Self {
            latitude_deg,
            longitude_deg: normalize_longitude(longitude_deg),
        })
    }
}

fn normalize_longitude(lon: f64) -> f64 {
    if (-180.0..180.0).contains(&lon) {
        return lon;
    }
    let wrapped = (lon + 180.0).rem_euclid(360.0) - 180.0;
    // rem_euclid can round up to exactly 360 for tiny negative inputs
    if wrapped >= 180.0 {
        wrapped - 360.0
    } else {
        wrapped
    }
}

/// One time-stamped ECI state sample of a satellite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EphemerisRecord {
    pub orbit_number: u32,
    pub timestamp_ms: i64,
    pub position_eci_km: [f64; 3],
    pub velocity_eci_km_s: [f64; 3],
}

/// Image-acquisition request.
///
/// Priority 1 is the highest, 4 the lowest. The DTO bounds are epoch
/// milliseconds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcquisitionRequest {
    pub request_id: String,
    pub priority: u8,
    pub dto_start_ms: i64,
    pub dto_end_ms: i64,
    pub median_start: GeoPoint,
    pub median_end: GeoPoint,
    pub satellite_id: String,
    #[serde(default)]
    pub completed: bool,
}

impl AcquisitionRequest {
    pub fn check(&self) -> Result<()> {
        if !(1..=4).contains(&self.priority) {
            return Err(Error::Data(format!(
                "request {}: priority {} outside 1..=4",
                self.request_id, self.priority
            )));
        }
        if self.dto_start_ms >= self.dto_end_ms {
            return Err(Error::Data(format!(
                "request {}: DTO start {} not before end {}",
                self.request_id, self.dto_start_ms, self.dto_end_ms
            )));
        }
        Ok(())
    }

    /// Acquisition time in milliseconds implied by the median line.
    pub fn acquisition_duration_ms(&self) -> i64 {
        geometry::acquisition_duration(&self.median_start, &self.median_end)
    }

    /// Midpoint of the median line, the DTO reference point.
    pub fn center(&self) -> GeoPoint {
        geometry::midpoint(&self.median_start, &self.median_end)
    }
}

/// Physical constants the planners operate under.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalConfig {
    pub slew_rate_deg_s: f64,
    pub max_depointing_deg: f64,
    pub earth_radius_km: f64,
}

impl Default for PhysicalConfig {
    fn default() -> Self {
        Self {
            slew_rate_deg_s: geometry::SLEW_RATE_DEG_S,
            max_depointing_deg: geometry::MAX_DEPOINTING_DEG,
            earth_radius_km: geometry::EARTH_RADIUS_KM,
        }
    }
}

/// Satellites with their ephemerides plus the requests to plan.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemInstance {
    pub satellites: BTreeMap<String, Ephemeris>,
    pub requests: Vec<AcquisitionRequest>,
    pub config: PhysicalConfig,
}

impl ProblemInstance {
    pub fn new(
        satellites: BTreeMap<String, Ephemeris>,
        requests: Vec<AcquisitionRequest>,
    ) -> Result<Self> {
        let mut seen = std::collections::BTreeSet::new();
        for r in &requests {
            r.check()?;
            if !seen.insert(r.request_id.as_str()) {
                return Err(Error::Data(format!("duplicate request id {}", r.request_id)));
            }
            let eph = satellites.get(&r.satellite_id).ok_or_else(|| {
                Error::Data(format!(
                    "request {} names unknown satellite {}",
                    r.request_id, r.satellite_id
                ))
            })?;
            let (start, end) = eph.span();
            if r.dto_start_ms < start || r.dto_end_ms > end {
                return Err(Error::Data(format!(
                    "request {} DTO [{}, {}] outside ephemeris span [{start}, {end}]",
                    r.request_id, r.dto_start_ms, r.dto_end_ms
                )));
            }
        }
        Ok(Self {
            satellites,
            requests,
            config: PhysicalConfig::default(),
        })
    }

    pub fn request(&self, id: &str) -> Option<&AcquisitionRequest> {
        self.requests.iter().find(|r| r.request_id == id)
    }

    pub fn request_index(&self) -> BTreeMap<&str, &AcquisitionRequest> {
        self.requests
            .iter()
            .map(|r| (r.request_id.as_str(), r))
            .collect()
    }

    /// Requests still to be planned for one satellite, in DTO-start order.
    pub fn open_requests_for(&self, satellite_id: &str) -> Vec<&AcquisitionRequest> {
        let mut out: Vec<_> = self
            .requests
            .iter()
            .filter(|r| !r.completed && r.satellite_id == satellite_id)
            .collect();
        out.sort_by(|a, b| {
            (a.dto_start_ms, a.dto_end_ms, &a.request_id).cmp(&(
                b.dto_start_ms,
                b.dto_end_ms,
                &b.request_id,
            ))
        });
        out
    }
}

/// One committed acquisition in a satellite's timeline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainedAcquisition {
    pub request_id: String,
    pub acquisition_start_ms: i64,
    pub acquisition_duration_ms: i64,
    /// Slew time from the previous acquisition (or from nadir for the first).
    #[serde(rename = "relay_duration_s")]
    pub relay_duration_s_from_previous: i64,
    pub start_attitude: Attitude,
    pub end_attitude: Attitude,
}

impl ChainedAcquisition {
    pub fn end_ms(&self) -> i64 {
        self.acquisition_start_ms + self.acquisition_duration_ms
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct PriorityStats {
    pub total: usize,
    pub completed: usize,
    /// Completion percentage, 0 when `total` is 0.
    pub rate: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct PlanStats {
    pub p1: PriorityStats,
    pub p2: PriorityStats,
    pub p3: PriorityStats,
    pub p4: PriorityStats,
}

impl PlanStats {
    pub fn by_priority(&self, priority: u8) -> &PriorityStats {
        match priority {
            1 => &self.p1,
            2 => &self.p2,
            3 => &self.p3,
            4 => &self.p4,
            _ => panic!("priority {priority} outside 1..=4"),
        }
    }

    fn by_priority_mut(&mut self, priority: u8) -> &mut PriorityStats {
        match priority {
            1 => &mut self.p1,
            2 => &mut self.p2,
            3 => &mut self.p3,
            4 => &mut self.p4,
            _ => panic!("priority {priority} outside 1..=4"),
        }
    }

    pub fn completed_total(&self) -> usize {
        self.p1.completed + self.p2.completed + self.p3.completed + self.p4.completed
    }
}

/// Per-satellite acquisition timelines plus completion statistics.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Plan {
    pub satellites: BTreeMap<String, Vec<ChainedAcquisition>>,
    pub stats: PlanStats,
}

impl Plan {
    pub fn new(satellites: BTreeMap<String, Vec<ChainedAcquisition>>) -> Self {
        Self {
            satellites,
            stats: PlanStats::default(),
        }
    }

    pub fn acquisitions(&self) -> impl Iterator<Item = &ChainedAcquisition> {
        self.satellites.values().flatten()
    }

    pub fn len(&self) -> usize {
        self.satellites.values().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Recomputes the statistics over the instance's not-yet-completed requests.
    pub fn with_stats(mut self, instance: &ProblemInstance) -> Self {
        self.stats = self.compute_stats(instance);
        self
    }

    pub fn compute_stats(&self, instance: &ProblemInstance) -> PlanStats {
        let done: std::collections::BTreeSet<&str> =
            self.acquisitions().map(|a| a.request_id.as_str()).collect();
        let mut stats = PlanStats::default();
        for r in instance.requests.iter().filter(|r| !r.completed) {
            let s = stats.by_priority_mut(r.priority);
            s.total += 1;
            if done.contains(r.request_id.as_str()) {
                s.completed += 1;
            }
        }
        for p in 1..=4 {
            let s = stats.by_priority_mut(p);
            s.rate = if s.total == 0 {
                0.0
            } else {
                100.0 * s.completed as f64 / s.total as f64
            };
        }
        stats
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn longitude_is_wrapped() {
        assert_eq!(GeoPoint::new(0.0, 180.0).longitude_deg, -180.0);
        assert_eq!(GeoPoint::new(0.0, 190.0).longitude_deg, -170.0);
        assert_eq!(GeoPoint::new(0.0, -540.0).longitude_deg, -180.0);
        assert_eq!(GeoPoint::new(0.0, 12.5).longitude_deg, 12.5);
        assert!(GeoPoint::try_new(91.0, 0.0).is_err());
        assert!(GeoPoint::try_new(f64::NAN, 0.0).is_err());
    }

    #[test]
    fn request_checks() {
        let mut r = AcquisitionRequest {
            request_id: "R".into(),
            priority: 5,
            dto_start_ms: 0,
            dto_end_ms: 10,
            median_start: GeoPoint::new(0.0, 0.0),
            median_end: GeoPoint::new(0.0, 0.0),
            satellite_id: "S".into(),
            completed: false,
        };
        assert!(matches!(r.check(), Err(Error::Data(_))));
        r.priority = 1;
        assert!(r.check().is_ok());
        r.dto_end_ms = 0;
        assert!(matches!(r.check(), Err(Error::Data(_))));
    }
}
