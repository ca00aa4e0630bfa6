//! JSON file formats.
//!
//! Writers emit the canonical form: sorted keys, one array element per
//! line, UTF-8, LF endings. Parsing a canonical file and writing it back
//! reproduces it byte for byte.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{AcquisitionRequest, EphemerisRecord, Plan};
use crate::error::{Error, Result};
use crate::geometry::Ephemeris;

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EphemerisLine {
    orbit_number: u32,
    position_km: [f64; 3],
    satellite_id: String,
    timestamp_ms: i64,
    velocity_km_s: [f64; 3],
}

pub fn parse_ephemeris(path: impl AsRef<Path>) -> Result<BTreeMap<String, Ephemeris>> {
    let text = std::fs::read_to_string(path)?;
    parse_ephemeris_str(&text)
}

pub fn parse_ephemeris_str(text: &str) -> Result<BTreeMap<String, Ephemeris>> {
    let lines: Vec<EphemerisLine> = serde_json::from_str(text).map_err(json_error)?;
    let mut grouped: BTreeMap<String, Vec<EphemerisRecord>> = BTreeMap::new();
    for (i, l) in lines.into_iter().enumerate() {
        let finite = l.position_km.iter().chain(&l.velocity_km_s).all(|c| c.is_finite());
        if !finite {
            return Err(Error::parse(
                format!("record {i}"),
                "non-finite position or velocity",
            ));
        }
        let records = grouped.entry(l.satellite_id).or_default();
        if let Some(prev) = records.last() {
            if l.timestamp_ms <= prev.timestamp_ms {
                return Err(Error::Data(format!(
                    "record {i}: timestamp {} does not increase after {}",
                    l.timestamp_ms, prev.timestamp_ms
                )));
            }
        }
        records.push(EphemerisRecord {
            orbit_number: l.orbit_number,
            timestamp_ms: l.timestamp_ms,
            position_eci_km: l.position_km,
            velocity_eci_km_s: l.velocity_km_s,
        });
    }
    grouped
        .into_iter()
        .map(|(id, records)| Ok((id, Ephemeris::from_sorted(records)?)))
        .collect()
}

pub fn serialize_ephemeris(satellites: &BTreeMap<String, Ephemeris>) -> String {
    let lines = satellites.iter().flat_map(|(id, eph)| {
        eph.records().iter().map(move |r| EphemerisLine {
            orbit_number: r.orbit_number,
            position_km: r.position_eci_km,
            satellite_id: id.clone(),
            timestamp_ms: r.timestamp_ms,
            velocity_km_s: r.velocity_eci_km_s,
        })
    });
    json_lines(lines)
}

pub fn write_ephemeris(
    path: impl AsRef<Path>,
    satellites: &BTreeMap<String, Ephemeris>,
) -> Result<()> {
    std::fs::write(path, serialize_ephemeris(satellites))?;
    Ok(())
}

pub fn parse_requests(path: impl AsRef<Path>) -> Result<Vec<AcquisitionRequest>> {
    let text = std::fs::read_to_string(path)?;
    parse_requests_str(&text)
}

pub fn parse_requests_str(text: &str) -> Result<Vec<AcquisitionRequest>> {
    let requests: Vec<AcquisitionRequest> = serde_json::from_str(text).map_err(json_error)?;
    for r in &requests {
        r.check()?;
        // re-validate coordinates: serde bypasses GeoPoint::try_new
        for p in [&r.median_start, &r.median_end] {
            let checked = super::GeoPoint::try_new(p.latitude_deg, p.longitude_deg)?;
            if checked != *p {
                return Err(Error::Data(format!(
                    "request {}: longitude {} outside [-180, 180)",
                    r.request_id, p.longitude_deg
                )));
            }
        }
    }
    Ok(requests)
}

pub fn serialize_requests(requests: &[AcquisitionRequest]) -> String {
    json_lines(requests.iter())
}

pub fn write_requests(path: impl AsRef<Path>, requests: &[AcquisitionRequest]) -> Result<()> {
    std::fs::write(path, serialize_requests(requests))?;
    Ok(())
}

pub fn serialize_plan(plan: &Plan) -> String {
    let value = serde_json::to_value(plan).expect("plan serializes");
    let mut s = serde_json::to_string_pretty(&value).expect("value serializes");
    s.push('\n');
    s
}

pub fn parse_plan_str(text: &str) -> Result<Plan> {
    serde_json::from_str(text).map_err(json_error)
}

pub fn write_plan(path: impl AsRef<Path>, plan: &Plan) -> Result<()> {
    std::fs::write(path, serialize_plan(plan))?;
    Ok(())
}

/// `[`, one compact sorted-key object per line, `]`.
fn json_lines<T: Serialize>(items: impl Iterator<Item = T>) -> String {
    let mut out = String::from("[");
    let mut first = true;
    for item in items {
        // Value's map is a BTreeMap, so keys come out sorted
        let v: Value = serde_json::to_value(item).expect("record serializes");
        out.push_str(if first { "\n" } else { ",\n" });
        out.push_str(&v.to_string());
        first = false;
    }
    out.push_str(if first { "]\n" } else { "\n]\n" });
    out
}

fn json_error(e: serde_json::Error) -> Error {
    Error::parse(format!("line {} column {}", e.line(), e.column()), e.to_string())
}
