use thiserror::Error;

use crate::sim::GateKind;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("{kind} expects {expected} parameter(s), got {got}")]
    Arity {
        kind: GateKind,
        expected: usize,
        got: usize,
    },
    #[error("qubit index {qubit} out of range for a {n_qubits}-qubit register")]
    QubitOutOfRange { qubit: usize, n_qubits: usize },
    #[error("gate {kind} acts on {expected} qubit(s), got {got}")]
    GateWidth {
        kind: GateKind,
        expected: usize,
        got: usize,
    },
    #[error("repeated qubit {0} in a gate's qubit list")]
    RepeatedQubit(usize),
    #[error("parameter vector has length {got}, circuit expects {expected}")]
    ParamLength { expected: usize, got: usize },
    #[error("parameter slot {slot} (+{arity}) exceeds the circuit's {n_params} slots")]
    SlotOutOfRange { slot: usize, arity: usize, n_params: usize },
    #[error("gate {0} needs a parameter source")]
    MissingParams(GateKind),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("probability {0} is outside [0, 1]")]
    ProbabilityOutOfRange(f64),
    #[error("noise channels require a density matrix; promote the pure state first")]
    PureStateChannel,
    #[error("fidelity reference state must be pure")]
    MixedReference,
    #[error("unknown noise model `{0}`")]
    UnknownNoiseModel(String),
    #[error("unknown channel `{0}`")]
    UnknownChannel(String),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("invalid pool: {0}")]
    InvalidPool(String),
    #[error("pool has a single working-range length left; nothing to shrink")]
    NothingToShrink,
    #[error("structure entry {index} at placeholder {placeholder} is outside a pool of {pool_size}")]
    StructureIndex {
        placeholder: usize,
        index: usize,
        pool_size: usize,
    },
    #[error("structure has {got} placeholders, expected {expected}")]
    StructureLength { expected: usize, got: usize },
    #[error("Hamiltonian is constant; energy cannot be scaled")]
    ConstantHamiltonian,
    #[error("{got} nodes exceeds the supported maximum of {max}")]
    TooManyNodes { got: usize, max: usize },
    #[error("duplicate term `{0}`")]
    DuplicateTerm(String),
    #[error("invalid graph: {0}")]
    InvalidGraph(String),
    #[error("unknown benchmark graph `{0}`")]
    UnknownGraph(String),
    #[error("every structure probability in the batch underflowed to zero")]
    DegenerateBatch,
    #[error("encoder cache does not match the current weights")]
    StaleCache,
    #[error("invalid encoder configuration: {0}")]
    EncoderConfig(String),
    #[error("shape mismatch: expected {expected:?}, got {got:?}")]
    Shape {
        expected: (usize, usize),
        got: (usize, usize),
    },
    #[error("non-finite values in {0}")]
    NonFinite(&'static str),
    #[error("empty history")]
    EmptyHistory,
    #[error("invalid search configuration: {0}")]
    SearchConfig(String),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
}
