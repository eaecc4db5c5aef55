//! Energy gradients with respect to circuit parameter slots.

use num_complex::Complex64 as C64;

use super::circuit::{run_circuit, CircuitIR};
use super::gates::{gate_matrix, gate_matrix_derivative, GateKind};
use super::noise::{run_noisy, NoiseSpec};
use super::state::{apply_matrix, expectation_diag, QuantumState, StateVector};
use crate::error::{Error, Result};

/// `⟨ψ|H|ψ⟩` of the circuit output for a diagonal `H`.
pub fn energy(circuit: &CircuitIR, params: &[f64], initial: &QuantumState, hdiag: &[f64]) -> Result<f64> {
    let out = run_circuit(circuit, params, initial)?;
    expectation_diag(&out, hdiag)
}

/// Energy of the noisy output density matrix.
pub fn noisy_energy(
    circuit: &CircuitIR,
    params: &[f64],
    noise: &NoiseSpec,
    initial: &QuantumState,
    hdiag: &[f64],
) -> Result<f64> {
    let rho = run_noisy(circuit, params, noise, initial)?;
    expectation_diag(&QuantumState::Mixed(rho), hdiag)
}

/// Energy and its gradient by one forward and one reverse sweep.
///
/// Walking the gates backwards, `ψ` is un-computed with `U†` and the
/// costate `λ = H ψ_out` is pulled back the same way; each parameter
/// contributes `2 Re ⟨λ| ∂U |ψ_before⟩`.
pub fn adjoint_gradient(
    circuit: &CircuitIR,
    params: &[f64],
    initial: &StateVector,
    hdiag: &[f64],
) -> Result<(f64, Vec<f64>)> {
    let out = run_circuit(circuit, params, &QuantumState::Pure(initial.clone()))?;
    let QuantumState::Pure(mut psi) = out else {
        unreachable!("pure input stays pure")
    };
    let n = circuit.n_qubits;
    if hdiag.len() != 1 << n {
        return Err(Error::DimensionMismatch {
            expected: 1 << n,
            got: hdiag.len(),
        });
    }
    let mut lambda: Vec<C64> = psi.amplitudes().iter().zip(hdiag).map(|(a, h)| a * h).collect();
    let e: f64 = psi
        .amplitudes()
        .iter()
        .zip(&lambda)
        .map(|(a, l)| (a.conj() * l).re)
        .sum();
    let mut grad = vec![0.0; circuit.n_params];
    let mut scratch = vec![C64::new(0.0, 0.0); psi.amplitudes().len()];
    for g in circuit.gates.iter().rev() {
        if g.kind == GateKind::Idle {
            continue;
        }
        let angles = g.resolve(params);
        let u_dag = gate_matrix(g.kind, angles)?.adjoint();
        apply_matrix(psi.amps_mut(), n, &g.qubits, &u_dag);
        if let Some(slot) = g.slot() {
            for k in 0..g.kind.param_arity() {
                let d = gate_matrix_derivative(g.kind, angles, k)?;
                scratch.copy_from_slice(psi.amplitudes());
                apply_matrix(&mut scratch, n, &g.qubits, &d);
                let overlap: f64 = lambda.iter().zip(&scratch).map(|(l, s)| (l.conj() * s).re).sum();
                grad[slot + k] += 2.0 * overlap;
            }
        }
        apply_matrix(&mut lambda, n, &g.qubits, &u_dag);
    }
    Ok((e, grad))
}

// Four-term rule coefficients for generators with spectrum {0, ±1/2}.
const D1: f64 = (std::f64::consts::SQRT_2 + 1.0) / (4.0 * std::f64::consts::SQRT_2);
const D2: f64 = (std::f64::consts::SQRT_2 - 1.0) / (4.0 * std::f64::consts::SQRT_2);

/// Gradient by parameter shifting, given any objective of the parameters.
///
/// RX/RY/RZ and every U3 angle use `[f(θ+π/2) − f(θ−π/2)]/2`. The φ and λ
/// angles of CU3 are controlled phases with the same two-term rule; its θ
/// angle is a controlled RY and needs the four-term rule with shifts
/// `±π/2` and `±3π/2`.
pub fn parameter_shift_with<F>(circuit: &CircuitIR, params: &[f64], mut objective: F) -> Result<Vec<f64>>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    use std::f64::consts::FRAC_PI_2;
    let mut grad = vec![0.0; circuit.n_params];
    let mut shifted = params.to_vec();
    let mut eval = |slot: usize, shift: f64, shifted: &mut Vec<f64>| -> Result<f64> {
        shifted[slot] = params[slot] + shift;
        let v = objective(shifted);
        shifted[slot] = params[slot];
        v
    };
    for (gi, slot) in circuit.slot_gates() {
        let kind = circuit.gates[gi].kind;
        for k in 0..kind.param_arity() {
            let s = slot + k;
            let g = if kind == GateKind::CU3 && k == 0 {
                D1 * (eval(s, FRAC_PI_2, &mut shifted)? - eval(s, -FRAC_PI_2, &mut shifted)?)
                    - D2 * (eval(s, 3.0 * FRAC_PI_2, &mut shifted)? - eval(s, -3.0 * FRAC_PI_2, &mut shifted)?)
            } else {
                0.5 * (eval(s, FRAC_PI_2, &mut shifted)? - eval(s, -FRAC_PI_2, &mut shifted)?)
            };
            grad[s] += g;
        }
    }
    Ok(grad)
}

/// Parameter-shift gradient of the noiseless energy.
pub fn parameter_shift_gradient(
    circuit: &CircuitIR,
    params: &[f64],
    initial: &QuantumState,
    hdiag: &[f64],
) -> Result<Vec<f64>> {
    parameter_shift_with(circuit, params, |p| energy(circuit, p, initial, hdiag))
}

/// Parameter-shift gradient of the energy under noise.
pub fn noisy_parameter_shift_gradient(
    circuit: &CircuitIR,
    params: &[f64],
    noise: &NoiseSpec,
    initial: &QuantumState,
    hdiag: &[f64],
) -> Result<Vec<f64>> {
    parameter_shift_with(circuit, params, |p| noisy_energy(circuit, p, noise, initial, hdiag))
}
