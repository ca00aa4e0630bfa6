//! Hand-written SVG figures: a request map and a per-satellite Gantt chart.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use crate::model::{Plan, ProblemInstance};

const MAP_SCALE: f64 = 3.0;

/// Equirectangular map of request centres: green when the plan acquires
/// them, blue when it misses them. Requests completed before planning are
/// left out.
pub fn svg_map(instance: &ProblemInstance, plan: &Plan) -> String {
    let done: BTreeSet<&str> = plan.acquisitions().map(|a| a.request_id.as_str()).collect();
    let (w, h) = (360.0 * MAP_SCALE, 180.0 * MAP_SCALE);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#
    );
    let _ = writeln!(s, r##"<rect width="{w}" height="{h}" fill="#f4f4f4"/>"##);
    for lon in (-180..=180).step_by(30) {
        let x = (lon as f64 + 180.0) * MAP_SCALE;
        let _ = writeln!(s, r##"<line x1="{x}" y1="0" x2="{x}" y2="{h}" stroke="#ccc" stroke-width="0.5"/>"##);
    }
    for lat in (-90..=90).step_by(30) {
        let y = (90.0 - lat as f64) * MAP_SCALE;
        let _ = writeln!(s, r##"<line x1="0" y1="{y}" x2="{w}" y2="{y}" stroke="#ccc" stroke-width="0.5"/>"##);
    }
    for r in instance.requests.iter().filter(|r| !r.completed) {
        let c = r.center();
        let x = (c.longitude_deg + 180.0) * MAP_SCALE;
        let y = (90.0 - c.latitude_deg) * MAP_SCALE;
        let color = if done.contains(r.request_id.as_str()) { "green" } else { "blue" };
        let _ = writeln!(
            s,
            r#"<circle cx="{x:.2}" cy="{y:.2}" r="2" fill="{color}"><title>{}</title></circle>"#,
            escape(&r.request_id)
        );
    }
    s.push_str("</svg>\n");
    s
}

/// One row per satellite: grey relay bars followed by acquisition bars,
/// coloured by priority.
pub fn svg_gantt(instance: &ProblemInstance, plan: &Plan) -> String {
    let index = instance.request_index();
    let times: Vec<(i64, i64)> = plan
        .acquisitions()
        .map(|a| (a.acquisition_start_ms - a.relay_duration_s_from_previous * 1000, a.end_ms()))
        .collect();
    let t0 = times.iter().map(|t| t.0).min().unwrap_or(0);
    let t1 = times.iter().map(|t| t.1).max().unwrap_or(1).max(t0 + 1);
    let (left, width, row_h) = (120.0, 1200.0, 30.0);
    let height = row_h * plan.satellites.len().max(1) as f64 + 40.0;
    let x_of = |t: i64| left + (t - t0) as f64 / (t1 - t0) as f64 * width;
    let mut s = String::new();
    let total_w = left + width + 20.0;
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{total_w}" height="{height}" viewBox="0 0 {total_w} {height}">"#
    );
    for (row, (sat, acqs)) in plan.satellites.iter().enumerate() {
        let y = 20.0 + row as f64 * row_h;
        let _ = writeln!(
            s,
            r#"<text x="4" y="{:.1}" font-family="monospace" font-size="12">{}</text>"#,
            y + row_h * 0.6,
            escape(sat)
        );
        for a in acqs {
            let relay_start = a.acquisition_start_ms - a.relay_duration_s_from_previous * 1000;
            let (xr, xs, xe) = (x_of(relay_start), x_of(a.acquisition_start_ms), x_of(a.end_ms()));
            let color = match index.get(a.request_id.as_str()).map(|r| r.priority) {
                Some(1) => "#c0392b",
                Some(2) => "#e67e22",
                Some(3) => "#2980b9",
                _ => "#27ae60",
            };
            let _ = writeln!(
                s,
                r##"<rect x="{xr:.2}" y="{:.1}" width="{:.2}" height="{:.1}" fill="#bbb"/>"##,
                y + row_h * 0.35,
                (xs - xr).max(0.0),
                row_h * 0.3
            );
            let _ = writeln!(
                s,
                r#"<rect x="{xs:.2}" y="{:.1}" width="{:.2}" height="{:.1}" fill="{color}"><title>{}</title></rect>"#,
                y + row_h * 0.2,
                (xe - xs).max(0.5),
                row_h * 0.6,
                escape(&a.request_id)
            );
        }
    }
    s.push_str("</svg>\n");
    s
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}
