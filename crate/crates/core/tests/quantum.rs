mod common;

use orbit_sched::quantum::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn draw(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-scale..scale)).collect()
}

#[test]
fn statevector_matches_dense_oracle() {
    let spec = PqcSpec::default();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..100 {
        let p = draw(&mut rng, spec.n_params(), std::f64::consts::PI);
        let x = draw(&mut rng, spec.n_features(), 3.0);
        let sv = statevector(&spec, &p, &x).unwrap();
        let oracle = common::dense_state(&spec, &p, &x);
        for (a, b) in sv.amplitudes.iter().zip(&oracle) {
            assert!((a - b).norm() < 1e-10);
        }
        assert!((sv.norm_sqr() - 1.0).abs() < 1e-12);
    }
}

#[test]
fn other_shapes_match_too() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for spec in [
        PqcSpec { n_qubits: 1, n_reps: 2, entangle: true },
        PqcSpec { n_qubits: 3, n_reps: 3, entangle: false },
        PqcSpec { n_qubits: 2, n_reps: 1, entangle: true },
    ] {
        let p = draw(&mut rng, spec.n_params(), 3.0);
        let x = draw(&mut rng, spec.n_features(), 3.0);
        let sv = statevector(&spec, &p, &x).unwrap();
        for (a, b) in sv.amplitudes.iter().zip(&common::dense_state(&spec, &p, &x)) {
            assert!((a - b).norm() < 1e-10);
        }
        assert_eq!(simulate(&spec, &p, &x).unwrap().len(), spec.n_outputs());
    }
}

#[test]
fn shift_rule_matches_finite_differences() {
    let spec = PqcSpec::default();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let h = 1e-5;
    for _ in 0..10 {
        let p = draw(&mut rng, spec.n_params(), std::f64::consts::PI);
        let x = draw(&mut rng, spec.n_features(), 2.0);
        let gp = param_shift_grad(&spec, &p, &x).unwrap();
        let gx = feature_shift_grad(&spec, &p, &x).unwrap();
        for j in 0..p.len() {
            let (mut a, mut b) = (p.clone(), p.clone());
            a[j] += h;
            b[j] -= h;
            let (fa, fb) = (simulate(&spec, &a, &x).unwrap(), simulate(&spec, &b, &x).unwrap());
            for k in 0..2 {
                assert!((gp[j][k] - (fa[k] - fb[k]) / (2.0 * h)).abs() < 1e-5);
            }
        }
        for j in 0..x.len() {
            let (mut a, mut b) = (x.clone(), x.clone());
            a[j] += h;
            b[j] -= h;
            let (fa, fb) = (simulate(&spec, &p, &a).unwrap(), simulate(&spec, &p, &b).unwrap());
            for k in 0..2 {
                assert!((gx[j][k] - (fa[k] - fb[k]) / (2.0 * h)).abs() < 1e-5);
            }
        }
    }
}

#[test]
fn zero_input_gives_plus_one() {
    let spec = PqcSpec::default();
    let out = simulate(&spec, &vec![0.0; spec.n_params()], &vec![0.0; spec.n_features()]).unwrap();
    assert!((out[0] - 1.0).abs() < 1e-12 && (out[1] - 1.0).abs() < 1e-12);
}

#[test]
fn wrong_lengths_are_rejected() {
    let spec = PqcSpec::default();
    assert!(simulate(&spec, &[0.0; 3], &vec![0.0; spec.n_features()]).is_err());
    assert!(param_shift_grad(&spec, &vec![0.0; spec.n_params()], &[0.0]).is_err());
}
