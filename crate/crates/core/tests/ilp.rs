mod common;

use std::time::Instant;

use orbit_sched::ilp::*;
use orbit_sched::model::{validate_plan, Plan};
use orbit_sched::Error;

#[test]
fn bb_matches_oracle_on_100_clusters() {
    let mut nontrivial = 0;
    for i in 0..100 {
        let (inst, step) = common::ilp_cluster(i);
        let model = common::model_of(&inst, step);
        assert!(model.grid.requests.iter().all(|g| g.candidates.len() <= 12));
        let t = Instant::now();
        let bb = solve_bb(&model, 0.0);
        assert!(t.elapsed().as_secs_f64() < 10.0);
        let oracle = brute_force_oracle(&model).unwrap();
        assert!(bb.proven);
        assert_eq!(bb.objective, oracle.objective, "cluster {i}");
        assert!(model.violated_rows(&bb.bits).is_empty());
        if model.sequence(&oracle.bits).len() >= 2 {
            nontrivial += 1;
        }
    }
    assert!(nontrivial >= 20, "only {nontrivial} clusters chain two or more requests");
}

#[test]
fn optimal_sequence_extracts_to_a_valid_plan() {
    for i in 0..30 {
        let (inst, step) = common::ilp_cluster(i);
        let model = common::model_of(&inst, step);
        let bb = solve_bb(&model, 0.0);
        let (sat, eph) = inst.satellites.iter().next().unwrap();
        let acqs = extract_plan(&bb, &model, eph).unwrap();
        assert_eq!(acqs.len(), model.sequence(&bb.bits).len());
        let plan = Plan::new([(sat.clone(), acqs)].into()).with_stats(&inst);
        let report = validate_plan(&plan, &inst);
        assert!(report.ok, "cluster {i}: {:?}", report.violations);
    }
}

#[test]
fn encode_round_trips_the_sequence() {
    let (inst, step) = common::ilp_cluster(5);
    let model = common::model_of(&inst, step);
    let best = brute_force_oracle(&model).unwrap();
    let seq = model.sequence(&best.bits);
    assert_eq!(model.encode(&seq), best.bits);
    assert!(model.violated_rows(&model.encode(&[])).is_empty());
    assert_eq!(model.evaluate(&model.encode(&[])), 0.0);
}

#[test]
fn oracle_refuses_large_models() {
    let inst = common::toy(1, 9, 3);
    let model = common::model_of(&inst, 600);
    assert!(matches!(brute_force_oracle(&model), Err(Error::Refused(_))));
}

#[test]
fn tiny_time_limit_reports_unproven_or_optimal() {
    let inst = common::toy(1, 8, 4);
    let model = common::model_of(&inst, 5);
    let a = solve_bb(&model, 1e-6);
    assert!(model.violated_rows(&a.bits).is_empty());
    if a.proven {
        assert_eq!(a.objective, brute_force_oracle(&model).unwrap().objective);
    }
}

#[test]
fn dump_names_every_row_family() {
    let (inst, step) = common::ilp_cluster(11);
    let text = common::model_of(&inst, step).dump();
    for tag in ["one_slot_per_request", "start_iff_completed", "successor_start"] {
        assert!(text.contains(tag), "{tag}");
    }
}
