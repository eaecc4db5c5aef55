use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64 as C64;

use super::gates::{gate_matrix, GateKind};
use super::state::{QuantumState, StateVector};
use crate::error::{Error, Result};

/// Where a gate takes its rotation angles from.
#[derive(Debug, Clone, PartialEq)]
pub enum Angles {
    /// Fixed-arity gates (H, X, CZ, ...).
    None,
    /// Consecutive entries `slot..slot + arity` of the circuit's parameter vector.
    Slot(usize),
    /// Constant angles baked into the circuit (encoding blocks, QFT phases).
    Fixed(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct GateInstance {
    pub kind: GateKind,
    pub qubits: Vec<usize>,
    pub angles: Angles,
    /// Part of the fixed scaffold (encoding block, QFT) rather than a
    /// placeholder expansion. Template gates are excluded from gate counts.
    pub template: bool,
}

impl GateInstance {
    pub fn new(kind: GateKind, qubits: Vec<usize>) -> Self {
        Self {
            kind,
            qubits,
            angles: Angles::None,
            template: false,
        }
    }

    pub fn with_slot(kind: GateKind, qubits: Vec<usize>, slot: usize) -> Self {
        Self {
            kind,
            qubits,
            angles: Angles::Slot(slot),
            template: false,
        }
    }

    pub fn with_fixed(kind: GateKind, qubits: Vec<usize>, angles: Vec<f64>) -> Self {
        Self {
            kind,
            qubits,
            angles: Angles::Fixed(angles),
            template: false,
        }
    }

    pub fn as_template(mut self) -> Self {
        self.template = true;
        self
    }

    pub fn slot(&self) -> Option<usize> {
        match self.angles {
            Angles::Slot(s) => Some(s),
            _ => None,
        }
    }

    /// Angles for this gate drawn from `params`.
    pub fn resolve<'a>(&'a self, params: &'a [f64]) -> &'a [f64] {
        match &self.angles {
            Angles::None => &[],
            Angles::Slot(s) => &params[*s..*s + self.kind.param_arity()],
            Angles::Fixed(v) => v,
        }
    }
}

/// Flat gate list with parameter-slot references.
#[derive(Debug, Clone, PartialEq)]
pub struct CircuitIR {
    pub n_qubits: usize,
    pub gates: Vec<GateInstance>,
    pub n_params: usize,
}

impl CircuitIR {
    pub fn new(n_qubits: usize) -> Self {
        Self {
            n_qubits,
            gates: Vec::new(),
            n_params: 0,
        }
    }

    /// Appends a gate, allocating fresh parameter slots when it is
    /// parameterized and has no explicit angle source.
    pub fn push(&mut self, mut gate: GateInstance) {
        if gate.kind.is_parameterized() && gate.angles == Angles::None {
            gate.angles = Angles::Slot(self.n_params);
        }
        if let Angles::Slot(s) = gate.angles {
            self.n_params = self.n_params.max(s + gate.kind.param_arity());
        }
        self.gates.push(gate);
    }

    pub fn extend(&mut self, gates: impl IntoIterator<Item = GateInstance>) {
        for g in gates {
            self.push(g);
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_qubits == 0 {
            return Err(Error::DimensionMismatch { expected: 1, got: 0 });
        }
        for g in &self.gates {
            if g.qubits.len() != g.kind.n_qubits() {
                return Err(Error::GateWidth {
                    kind: g.kind,
                    expected: g.kind.n_qubits(),
                    got: g.qubits.len(),
                });
            }
            for (i, &q) in g.qubits.iter().enumerate() {
                if q >= self.n_qubits {
                    return Err(Error::QubitOutOfRange {
                        qubit: q,
                        n_qubits: self.n_qubits,
                    });
                }
                if g.qubits[..i].contains(&q) {
                    return Err(Error::RepeatedQubit(q));
                }
            }
            let arity = g.kind.param_arity();
            match &g.angles {
                Angles::None if arity > 0 => return Err(Error::MissingParams(g.kind)),
                Angles::Slot(_) | Angles::Fixed(_) if arity == 0 => {
                    return Err(Error::Arity {
                        kind: g.kind,
                        expected: 0,
                        got: 1,
                    })
                }
                Angles::Slot(s) if s + arity > self.n_params => {
                    return Err(Error::SlotOutOfRange {
                        slot: *s,
                        arity,
                        n_params: self.n_params,
                    })
                }
                Angles::Fixed(v) if v.len() != arity => {
                    return Err(Error::Arity {
                        kind: g.kind,
                        expected: arity,
                        got: v.len(),
                    })
                }
                _ => {}
            }
        }
        Ok(())
    }

    /// `(gate index, slot)` pairs of all slot-parameterized gates.
    pub fn slot_gates(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.gates
            .iter()
            .enumerate()
            .filter_map(|(i, g)| g.slot().map(|s| (i, s)))
    }

    /// Dense unitary, column `j` being the image of basis state `j`.
    pub fn unitary(&self, params: &[f64]) -> Result<Vec<Vec<C64>>> {
        let dim = 1 << self.n_qubits;
        let mut cols = Vec::with_capacity(dim);
        for j in 0..dim {
            let out = run_circuit(self, params, &StateVector::basis(self.n_qubits, j).into())?;
            let QuantumState::Pure(s) = out else { unreachable!() };
            cols.push(s.amplitudes().to_vec());
        }
        Ok((0..dim).map(|r| (0..dim).map(|c| cols[c][r]).collect()).collect())
    }
}

/// Applies one gate in place; density matrices receive `U ρ U†`.
pub fn apply_gate(state: &mut QuantumState, gate: &GateInstance, params: &[f64]) -> Result<()> {
    let angles = match &gate.angles {
        Angles::Slot(s) => {
            let end = s + gate.kind.param_arity();
            if end > params.len() {
                return Err(Error::ParamLength {
                    expected: end,
                    got: params.len(),
                });
            }
            &params[*s..end]
        }
        _ => gate.resolve(params),
    };
    let m = gate_matrix(gate.kind, angles)?;
    if gate.qubits.len() != gate.kind.n_qubits() {
        return Err(Error::GateWidth {
            kind: gate.kind,
            expected: gate.kind.n_qubits(),
            got: gate.qubits.len(),
        });
    }
    state.apply(&gate.qubits, &m)
}

/// Runs `circuit` in gate order starting from `initial`.
pub fn run_circuit(circuit: &CircuitIR, params: &[f64], initial: &QuantumState) -> Result<QuantumState> {
    if params.len() != circuit.n_params {
        return Err(Error::ParamLength {
            expected: circuit.n_params,
            got: params.len(),
        });
    }
    if initial.n_qubits() != circuit.n_qubits {
        return Err(Error::DimensionMismatch {
            expected: 1 << circuit.n_qubits,
            got: initial.dim(),
        });
    }
    let mut state = initial.clone();
    for g in &circuit.gates {
        apply_gate(&mut state, g, params)?;
    }
    Ok(state)
}

/// QFT on `n` qubits (qubit 0 most significant): Hadamards and
/// controlled phases `CU3(0, 0, π/2^d)`, then the bit-reversal swaps as
/// three CNOTs each. Its unitary is the normalized DFT matrix
/// `ω^{jk}/√2ⁿ`, `ω = e^{2πi/2ⁿ}`.
pub fn build_qft(n: usize) -> CircuitIR {
    assert!(n >= 1, "QFT needs at least one qubit");
    let mut c = CircuitIR::new(n);
    for i in 0..n {
        c.push(GateInstance::new(GateKind::H, vec![i]));
        for j in i + 1..n {
            let phase = PI / f64::from(1u32 << (j - i));
            c.push(GateInstance::with_fixed(
                GateKind::CU3,
                vec![j, i],
                vec![0.0, 0.0, phase],
            ));
        }
    }
    for i in 0..n / 2 {
        let (a, b) = (i, n - 1 - i);
        c.push(GateInstance::new(GateKind::CNOT, vec![a, b]));
        c.push(GateInstance::new(GateKind::CNOT, vec![b, a]));
        c.push(GateInstance::new(GateKind::CNOT, vec![a, b]));
    }
    c
}

/// Normalized DFT matrix of size `dim`.
pub fn dft_matrix(dim: usize) -> Vec<Vec<C64>> {
    let norm = 1.0 / (dim as f64).sqrt();
    (0..dim)
        .map(|j| {
            (0..dim)
                .map(|k| C64::from_polar(norm, 2.0 * PI * ((j * k) % dim) as f64 / dim as f64))
                .collect()
        })
        .collect()
}

impl fmt::Display for CircuitIR {
    /// Line format: header `qubits N params M`, then one gate per line as
    /// `KIND q0[,q1] [slot=i | angles=a,b,c] [tpl]`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "qubits {} params {}", self.n_qubits, self.n_params)?;
        for g in &self.gates {
            let qs: Vec<String> = g.qubits.iter().map(usize::to_string).collect();
            write!(f, "{} {}", g.kind, qs.join(","))?;
            match &g.angles {
                Angles::None => {}
                Angles::Slot(s) => write!(f, " slot={s}")?,
                Angles::Fixed(v) => {
                    let vs: Vec<String> = v.iter().map(|x| format!("{x:?}")).collect();
                    write!(f, " angles={}", vs.join(","))?;
                }
            }
            if g.template {
                write!(f, " tpl")?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

impl FromStr for CircuitIR {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
            .filter(|(_, l)| !l.is_empty());
        let (hline, header) = lines.next().ok_or_else(|| parse_err(1, "missing header"))?;
        let h: Vec<&str> = header.split_whitespace().collect();
        let (n_qubits, n_params) = match h.as_slice() {
            ["qubits", n, "params", m] => (
                n.parse::<usize>()
                    .map_err(|e| parse_err(hline, format!("qubit count: {e}")))?,
                m.parse::<usize>()
                    .map_err(|e| parse_err(hline, format!("param count: {e}")))?,
            ),
            _ => return Err(parse_err(hline, "expected `qubits N params M`")),
        };
        let mut circuit = CircuitIR {
            n_qubits,
            gates: Vec::new(),
            n_params,
        };
        for (ln, line) in lines {
            let mut tokens = line.split_whitespace();
            let kind: GateKind = tokens.next().unwrap().parse().map_err(|e: String| parse_err(ln, e))?;
            let qubits = tokens
                .next()
                .ok_or_else(|| parse_err(ln, "missing qubit list"))?
                .split(',')
                .map(|q| q.parse::<usize>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| parse_err(ln, format!("qubit index: {e}")))?;
            let mut gate = GateInstance::new(kind, qubits);
            for tok in tokens {
                if tok == "tpl" {
                    gate.template = true;
                } else if let Some(s) = tok.strip_prefix("slot=") {
                    let s = s.parse().map_err(|e| parse_err(ln, format!("slot: {e}")))?;
                    gate.angles = Angles::Slot(s);
                } else if let Some(a) = tok.strip_prefix("angles=") {
                    let v = a
                        .split(',')
                        .map(str::parse::<f64>)
                        .collect::<std::result::Result<Vec<_>, _>>()
                        .map_err(|e| parse_err(ln, format!("angle: {e}")))?;
                    gate.angles = Angles::Fixed(v);
                } else {
                    return Err(parse_err(ln, format!("unexpected token `{tok}`")));
                }
            }
            circuit.gates.push(gate);
        }
        circuit.validate().map_err(|e| parse_err(0, e.to_string()))?;
        Ok(circuit)
    }
}
