mod common;

use orbit_sched::geometry::*;
use orbit_sched::model::GeoPoint;
use proptest::prelude::*;

#[test]
fn eci_norm_is_earth_radius() {
    for k in 0..500 {
        let lat = -90.0 + (k as f64 * 7.3) % 180.0;
        let lon = -180.0 + (k as f64 * 13.7) % 360.0;
        let t = REFERENCE_EPOCH_MS + k * 97_000;
        let p = geodetic_to_eci(&GeoPoint::new(lat, lon), t);
        assert!((p.norm() - EARTH_RADIUS_KM).abs() < 1e-9, "{}", p.norm());
    }
}

#[test]
fn eci_round_trip() {
    let p = GeoPoint::new(48.85, 2.35);
    let t = REFERENCE_EPOCH_MS + 12_345_678;
    let q = eci_to_geodetic(geodetic_to_eci(&p, t) * 1.1, t);
    assert!((q.latitude_deg - p.latitude_deg).abs() < 1e-9);
    assert!((q.longitude_deg - p.longitude_deg).abs() < 1e-9);
}

#[test]
fn dto_endpoints_sit_on_the_depointing_limit() {
    let inst = common::toy(2, 30, 7);
    let mut interior = 0;
    for r in &inst.requests {
        let eph = &inst.satellites[&r.satellite_id];
        let w = request_dto_window(r, eph, None).unwrap();
        let (a, b) = eph.span();
        for (t, clipped) in [(w.start_ms, w.start_ms == a), (w.end_ms, w.end_ms == b)] {
            let d = depointing_deg(&eph.interpolate_state(t).unwrap(), &r.center(), t);
            assert!(d <= MAX_DEPOINTING_DEG + 0.01);
            if !clipped {
                assert!((d - MAX_DEPOINTING_DEG).abs() <= 0.01, "{} at {t}: {d}", r.request_id);
                interior += 1;
            }
        }
    }
    assert!(interior > 0);
}

#[test]
fn great_circle_quarter() {
    let d = great_circle_km(&GeoPoint::new(0.0, 0.0), &GeoPoint::new(0.0, 90.0));
    assert!((d - EARTH_RADIUS_KM * std::f64::consts::FRAC_PI_2).abs() < 1e-9);
}

#[test]
fn maneuver_from_nadir() {
    let a = Attitude {
        roll_deg: 30.0,
        pitch_deg: 0.0,
        yaw_deg: 0.0,
    };
    assert_eq!(maneuver_duration(&Attitude::nadir(), &a), 30);
    assert_eq!(maneuver_duration(&a, &a), 0);
}

fn attitude() -> impl Strategy<Value = Attitude> {
    (-60.0..60.0f64, -60.0..60.0f64).prop_map(|(roll_deg, pitch_deg)| Attitude {
        roll_deg,
        pitch_deg,
        yaw_deg: 0.0,
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    #[test]
    fn maneuver_is_symmetric(a in attitude(), b in attitude()) {
        prop_assert_eq!(maneuver_duration(&a, &b), maneuver_duration(&b, &a));
        prop_assert!(angular_separation(&a, &b) <= 180.0);
    }
}

proptest! {
    #[test]
    fn triangle_inequality(
        a in (-89.0..89.0f64, -180.0..180.0f64),
        b in (-89.0..89.0f64, -180.0..180.0f64),
        c in (-89.0..89.0f64, -180.0..180.0f64),
    ) {
        let (a, b, c) = (GeoPoint::new(a.0, a.1), GeoPoint::new(b.0, b.1), GeoPoint::new(c.0, c.1));
        prop_assert!(great_circle_km(&a, &c) <= great_circle_km(&a, &b) + great_circle_km(&b, &c) + 1e-6);
    }

    #[test]
    fn destination_travels_the_distance(
        lat in -80.0..80.0f64, lon in -180.0..180.0f64, bearing in 0.0..360.0f64, dist in 1.0..3000.0f64,
    ) {
        let p = GeoPoint::new(lat, lon);
        let q = destination(&p, bearing, dist);
        prop_assert!((great_circle_km(&p, &q) - dist).abs() < 1e-6);
    }

    #[test]
    fn relay_is_minimal(seed in 0u64..20, i in 0usize..10, j in 0usize..10) {
        let inst = common::toy(1, 10, seed);
        let (f1, f2) = (&inst.requests[i], &inst.requests[j]);
        prop_assume!(i != j);
        let eph = &inst.satellites[&f1.satellite_id];
        let end = f1.dto_start_ms + f1.acquisition_duration_ms();
        if let Some(d) = min_relay_time(end, f1, f2, eph) {
            let from = end_attitude(f1, eph, end).unwrap();
            let arrive = end + d * 1000;
            prop_assert!(maneuver_duration(&from, &start_attitude(f2, eph, arrive).unwrap()) <= d);
            if d > 1 {
                let early = end + (d - 1) * 1000;
                prop_assert!(maneuver_duration(&from, &start_attitude(f2, eph, early).unwrap()) > d - 1);
            }
        }
    }
}
