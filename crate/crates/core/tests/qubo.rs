mod common;

use orbit_sched::ilp::solve_bb;
use orbit_sched::qubo::*;

#[test]
fn exhaustive_minimum_decodes_to_the_ilp_optimum() {
    for (k, (model, qubo)) in common::two_request_models(20, 14).iter().enumerate() {
        let ex = common::exhaustive(qubo);
        let decoded = qubo.decode(&ex.argmin);
        assert!(qubo.is_feasible(&ex.argmin), "model {k}");
        assert!(model.violated_rows(decoded).is_empty(), "model {k}");
        assert_eq!(model.evaluate(decoded), solve_bb(model, 0.0).objective, "model {k}");
        assert!(ex.min_infeasible > ex.max_feasible, "model {k}: {ex:?}");
    }
}

#[test]
fn single_request_models_enumerate_fully() {
    let inst = common::toy(1, 1, 3);
    let eph = inst.satellites.values().next().unwrap();
    let r = &inst.requests[0];
    let model = orbit_sched::ilp::model_for(&[(r, r.dto_start_ms)], eph, 240).unwrap();
    let qubo = to_qubo(&model);
    assert!(qubo.n_vars() <= 16);
    let n = qubo.n_vars();
    let (mut best, mut arg) = (f64::INFINITY, vec![]);
    for x in 0u32..(1 << n) {
        let bits: Vec<u8> = (0..n).map(|i| ((x >> i) & 1) as u8).collect();
        let e = qubo_energy(&qubo, &bits).unwrap();
        if e < best {
            (best, arg) = (e, bits);
        }
    }
    let ex = common::exhaustive(&qubo);
    assert_eq!(best, ex.min_energy);
    assert_eq!(model.evaluate(qubo.decode(&arg)), solve_bb(&model, 0.0).objective);
}

#[test]
fn energy_is_objective_plus_floor_on_feasible_states() {
    for (model, qubo) in common::two_request_models(5, 14) {
        let opt = solve_bb(&model, 0.0);
        let bits = qubo.with_best_slack(&model, &opt.bits);
        assert!(qubo.is_feasible(&bits));
        let e = qubo_energy(&qubo, &bits).unwrap();
        assert!((e - (-opt.objective + qubo.beta * qubo.penalty_floor())).abs() < 1e-9);
    }
}

#[test]
fn annealer_reaches_the_minimum() {
    for (k, (_, qubo)) in common::two_request_models(20, 14).iter().enumerate() {
        let min = common::exhaustive(qubo).min_energy;
        let hits = (0..10)
            .filter(|&s| (anneal(qubo, 20_000, 10.0, 0.01, s).unwrap().1 - min).abs() < 1e-9)
            .count();
        assert!(hits >= 8, "model {k}: {hits}/10");
    }
}

#[test]
fn beta_exceeds_total_weight() {
    for (model, qubo) in common::two_request_models(3, 14) {
        assert_eq!(qubo.beta, choose_beta(&model));
        assert!(qubo.beta > model.weights.iter().sum::<u64>() as f64);
    }
}

#[test]
fn export_lists_coefficients() {
    let (_, qubo) = common::two_request_models(1, 14).remove(0);
    let text = qubo.export();
    assert!(text.starts_with(&format!("# qubo n={}", qubo.n_vars())));
    assert_eq!(text.lines().count() - 1, qubo.coefficients.values().filter(|&&c| c != 0.0).count());
}

#[test]
fn bad_anneal_arguments() {
    let (_, qubo) = common::two_request_models(1, 14).remove(0);
    assert!(anneal(&qubo, 0, 1.0, 0.1, 0).is_err());
    assert!(anneal(&qubo, 10, 0.1, 1.0, 0).is_err());
    assert!(qubo_energy(&qubo, &[0]).is_err());
}
