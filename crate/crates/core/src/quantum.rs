//! Exact statevector simulation of the parametrized policy circuit.
//!
//! The circuit on `n` qubits starting in `|0…0⟩`:
//!
//! ```text
//! RX(θ_0..n) ; ring CNOT
//! repeat reps times:  RZ(x_r,0..n) ; RX(θ_r+1,0..n) ; ring CNOT
//! ```
//!
//! The ring is `i → (i+1) mod n`. Rotations follow `R_P(φ) = exp(−iφP/2)`,
//! so both parameter and feature gradients obey the two-term shift rule.
//! Qubit `k` is bit `k` of the basis index.

use num_complex::Complex64;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PqcSpec {
    pub n_qubits: usize,
    pub n_reps: usize,
    /// Ring of CNOTs after every rotation layer.
    pub entangle: bool,
}

impl Default for PqcSpec {
    fn default() -> Self {
        Self {
            n_qubits: 4,
            n_reps: 8,
            entangle: true,
        }
    }
}

impl PqcSpec {
    pub fn n_params(&self) -> usize {
        self.n_qubits * (self.n_reps + 1)
    }

    pub fn n_features(&self) -> usize {
        self.n_qubits * self.n_reps
    }

    /// Z expectations are read on the first two qubits (or one, when the
    /// register is a single qubit).
    pub fn n_outputs(&self) -> usize {
        self.n_qubits.min(2)
    }

    fn check(&self, params: &[f64], features: &[f64]) -> Result<()> {
        if params.len() != self.n_params() || features.len() != self.n_features() {
            return Err(Error::Argument(format!(
                "circuit takes {} params and {} features, got {} and {}",
                self.n_params(),
                self.n_features(),
                params.len(),
                features.len()
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Statevector {
    pub n_qubits: usize,
    pub amplitudes: Vec<Complex64>,
}

impl Statevector {
    pub fn zero(n_qubits: usize) -> Self {
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); 1 << n_qubits];
        amplitudes[0] = Complex64::new(1.0, 0.0);
        Self { n_qubits, amplitudes }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    fn apply_1q(&mut self, k: usize, m: [[Complex64; 2]; 2]) {
        let bit = 1 << k;
        for i in 0..self.amplitudes.len() {
            if i & bit == 0 {
                let (a0, a1) = (self.amplitudes[i], self.amplitudes[i | bit]);
                self.amplitudes[i] = m[0][0] * a0 + m[0][1] * a1;
                self.amplitudes[i | bit] = m[1][0] * a0 + m[1][1] * a1;
            }
        }
    }

    pub fn rx(&mut self, k: usize, theta: f64) {
        let (s, c) = (theta / 2.0).sin_cos();
        let c = Complex64::new(c, 0.0);
        let mis = Complex64::new(0.0, -s);
        self.apply_1q(k, [[c, mis], [mis, c]]);
    }

    pub fn rz(&mut self, k: usize, phi: f64) {
        let bit = 1 << k;
        let lo = Complex64::from_polar(1.0, -phi / 2.0);
        let hi = Complex64::from_polar(1.0, phi / 2.0);
        for (i, a) in self.amplitudes.iter_mut().enumerate() {
            *a *= if i & bit == 0 { lo } else { hi };
        }
    }

    pub fn cnot(&mut self, control: usize, target: usize) {
        let (cb, tb) = (1 << control, 1 << target);
        for i in 0..self.amplitudes.len() {
            if i & cb != 0 && i & tb == 0 {
                self.amplitudes.swap(i, i | tb);
            }
        }
    }

    /// `⟨Z_k⟩`.
    pub fn expect_z(&self, k: usize) -> f64 {
        let bit = 1 << k;
        self.amplitudes
            .iter()
            .enumerate()
            .map(|(i, a)| if i & bit == 0 { a.norm_sqr() } else { -a.norm_sqr() })
            .sum()
    }
}

fn ring(sv: &mut Statevector) {
    let n = sv.n_qubits;
    if n < 2 {
        return;
    }
    for i in 0..n {
        sv.cnot(i, (i + 1) % n);
    }
}

/// Final state of the circuit.
pub fn statevector(spec: &PqcSpec, params: &[f64], features: &[f64]) -> Result<Statevector> {
    spec.check(params, features)?;
    let n = spec.n_qubits;
    let mut sv = Statevector::zero(n);
    for k in 0..n {
        sv.rx(k, params[k]);
    }
    if spec.entangle {
        ring(&mut sv);
    }
    for r in 0..spec.n_reps {
        for k in 0..n {
            sv.rz(k, features[r * n + k]);
        }
        for k in 0..n {
            sv.rx(k, params[(r + 1) * n + k]);
        }
        if spec.entangle {
            ring(&mut sv);
        }
    }
    Ok(sv)
}

/// `⟨Z⟩` on the measured qubits.
pub fn simulate(spec: &PqcSpec, params: &[f64], features: &[f64]) -> Result<Vec<f64>> {
    let sv = statevector(spec, params, features)?;
    Ok((0..spec.n_outputs()).map(|k| sv.expect_z(k)).collect())
}

/// Shift-rule derivative of every output with respect to every entry of
/// `values`, where `eval` maps the shifted vector to the outputs.
fn shift_rule(values: &[f64], eval: impl Fn(&[f64]) -> Result<Vec<f64>>) -> Result<Vec<Vec<f64>>> {
    let half_pi = std::f64::consts::FRAC_PI_2;
    let mut shifted = values.to_vec();
    let mut out = Vec::with_capacity(values.len());
    for j in 0..values.len() {
        shifted[j] = values[j] + half_pi;
        let plus = eval(&shifted)?;
        shifted[j] = values[j] - half_pi;
        let minus = eval(&shifted)?;
        shifted[j] = values[j];
        out.push(plus.iter().zip(&minus).map(|(p, m)| (p - m) / 2.0).collect());
    }
    Ok(out)
}

/// `grad[j][k] = ∂⟨Z_k⟩/∂θ_j`.
pub fn param_shift_grad(spec: &PqcSpec, params: &[f64], features: &[f64]) -> Result<Vec<Vec<f64>>> {
    spec.check(params, features)?;
    shift_rule(params, |p| simulate(spec, p, features))
}

/// `grad[j][k] = ∂⟨Z_k⟩/∂x_j` for the encoded features.
pub fn feature_shift_grad(spec: &PqcSpec, params: &[f64], features: &[f64]) -> Result<Vec<Vec<f64>>> {
    spec.check(params, features)?;
    shift_rule(features, |x| simulate(spec, params, x))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_inputs_stay_in_ground_state() {
        let spec = PqcSpec::default();
        let out = simulate(&spec, &[0.0; 36], &[0.0; 32]).unwrap();
        assert_eq!(out, vec![1.0, 1.0]);
        let features: Vec<f64> = (0..32).map(|i| i as f64 * 0.37 - 3.0).collect();
        let out = simulate(&spec, &[0.0; 36], &features).unwrap();
        assert!((out[0] - 1.0).abs() < 1e-12 && (out[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn length_mismatch() {
        let spec = PqcSpec::default();
        assert!(simulate(&spec, &[0.0; 35], &[0.0; 32]).is_err());
        assert!(param_shift_grad(&spec, &[0.0; 36], &[0.0; 31]).is_err());
    }

    #[test]
    fn single_qubit_cosine() {
        let spec = PqcSpec {
            n_qubits: 1,
            n_reps: 1,
            entangle: false,
        };
        let theta = std::f64::consts::FRAC_PI_2;
        let g = param_shift_grad(&spec, &[theta, 0.0], &[0.0]).unwrap();
        assert!((g[0][0] + 1.0).abs() < 1e-12);
        let z = simulate(&spec, &[0.3, 0.0], &[0.0]).unwrap();
        assert!((z[0] - 0.3f64.cos()).abs() < 1e-12);
    }

    #[test]
    fn cnot_flips_target_when_control_set() {
        let mut sv = Statevector::zero(2);
        sv.rx(0, std::f64::consts::PI);
        sv.cnot(0, 1);
        assert!((sv.amplitudes[3].norm_sqr() - 1.0).abs() < 1e-12);
    }
}
