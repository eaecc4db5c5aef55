//! Exact statevector and density-matrix simulation.

mod adjoint;
mod circuit;
mod gates;
mod noise;
mod state;

pub use adjoint::{
    adjoint_gradient, energy, noisy_energy, noisy_parameter_shift_gradient, parameter_shift_gradient,
    parameter_shift_with,
};
pub use circuit::{apply_gate, build_qft, dft_matrix, run_circuit, Angles, CircuitIR, GateInstance};
pub use gates::{gate_matrix, gate_matrix_derivative, GateKind, GateMatrix, Matrix2, Matrix4};
pub use noise::{
    apply_channel, circuit_layers, make_channel, run_noisy, ChannelKind, GateScope, KrausChannel, NoiseSpec,
    NOISE_MODELS,
};
pub use state::{expectation_diag, fidelity, sample_expectation_diag, DensityMatrix, QuantumState, StateVector};
