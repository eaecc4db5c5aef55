//! Operation pools and circuit assembly from structure vectors.
//!
//! A pool of family `O1`–`O4` on `n` qubits comes in `n − 1` sizes. Size 1
//! holds every parameterized single-qubit gate over every contiguous
//! working range of length `2..=n`, the family's fixed single-qubit gate
//! over the full register, the controlled operation(s), and `E`. Each
//! further size drops the single-qubit operations with the shortest
//! remaining working range.
//!
//! A single-qubit operation over range `R` places one gate on each qubit of
//! `R`. A controlled operation over `R` places one two-qubit gate per listed
//! qubit `q`, controlled by `q` and targeting `(q + 1) mod n`; so
//! `CU3:[0,1,2,3]` on five qubits is a four-gate ladder and `CNOT:[2]` on
//! three qubits is `CNOT(2, 0)`.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::sim::{build_qft, CircuitIR, GateInstance, GateKind};

/// Gate kind of an operation, or the identity candidate `E`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OpKind {
    Gate(GateKind),
    Identity,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Operation {
    pub kind: OpKind,
    pub range: Vec<usize>,
}

impl Operation {
    pub fn gate(kind: GateKind, range: impl Into<Vec<usize>>) -> Self {
        Self {
            kind: OpKind::Gate(kind),
            range: range.into(),
        }
    }

    pub fn identity(range: impl Into<Vec<usize>>) -> Self {
        Self {
            kind: OpKind::Identity,
            range: range.into(),
        }
    }

    pub fn is_identity(&self) -> bool {
        self.kind == OpKind::Identity
    }

    /// True for operations made of single-qubit gates (the ones shrinking removes).
    pub fn is_single_qubit(&self) -> bool {
        matches!(self.kind, OpKind::Gate(g) if g.n_qubits() == 1)
    }

    pub fn is_controlled(&self) -> bool {
        matches!(self.kind, OpKind::Gate(g) if g.n_qubits() == 2)
    }

    /// Number of parameter slots one expansion of this operation uses.
    pub fn param_slots(&self) -> usize {
        match self.kind {
            OpKind::Identity => 0,
            OpKind::Gate(g) => g.param_arity() * self.range.len(),
        }
    }

    pub fn label(&self) -> String {
        self.to_string()
    }

    /// Gates of this operation on an `n_qubits` register, parameter slots
    /// numbered from `first_slot`.
    pub fn expand(&self, n_qubits: usize, first_slot: usize) -> Vec<GateInstance> {
        let OpKind::Gate(kind) = self.kind else {
            return Vec::new();
        };
        let arity = kind.param_arity();
        self.range
            .iter()
            .enumerate()
            .map(|(i, &q)| {
                let qubits = if kind.n_qubits() == 2 {
                    vec![q, (q + 1) % n_qubits]
                } else {
                    vec![q]
                };
                if arity > 0 {
                    GateInstance::with_slot(kind, qubits, first_slot + i * arity)
                } else {
                    GateInstance::new(kind, qubits)
                }
            })
            .collect()
    }

    fn validate(&self, n_qubits: usize) -> Result<()> {
        if self.range.is_empty() {
            return Err(Error::InvalidPool(format!("{self} has an empty working range")));
        }
        for (i, &q) in self.range.iter().enumerate() {
            if q >= n_qubits {
                return Err(Error::InvalidPool(format!(
                    "{self} addresses qubit {q} on a {n_qubits}-qubit register"
                )));
            }
            if self.range[..i].contains(&q) {
                return Err(Error::InvalidPool(format!("{self} repeats qubit {q}")));
            }
        }
        if self.is_controlled() && n_qubits < 2 {
            return Err(Error::InvalidPool(format!("{self} needs at least two qubits")));
        }
        if matches!(self.kind, OpKind::Gate(GateKind::Idle)) {
            return Err(Error::InvalidPool("IDLE is not a pool operation; use E".into()));
        }
        Ok(())
    }
}

impl fmt::Display for Operation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            OpKind::Identity => f.write_str("E")?,
            OpKind::Gate(g) => write!(f, "{g}")?,
        }
        let qs: Vec<String> = self.range.iter().map(usize::to_string).collect();
        write!(f, ":[{}]", qs.join(","))
    }
}

impl FromStr for Operation {
    type Err = Error;

    /// Parses labels such as `U3:[0,1,2]` or `E:[0,1,2,3,4]`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidPool(format!("bad operation label `{s}`"));
        let (name, rest) = s.trim().split_once(':').ok_or_else(bad)?;
        let inner = rest
            .trim()
            .strip_prefix('[')
            .and_then(|r| r.strip_suffix(']'))
            .ok_or_else(bad)?;
        let range = inner
            .split(',')
            .map(|q| q.trim().parse::<usize>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|_| bad())?;
        let kind = match name.trim() {
            "E" | "e" => OpKind::Identity,
            other => OpKind::Gate(other.parse().map_err(|_| bad())?),
        };
        Ok(Self { kind, range })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PoolFamily {
    O1,
    O2,
    O3,
    O4,
    Of1,
    Of2,
}

impl PoolFamily {
    /// (parameterized single-qubit gates, fixed single-qubit gates, controlled gates)
    fn gate_types(self) -> (&'static [GateKind], &'static [GateKind], &'static [GateKind]) {
        use GateKind::*;
        match self {
            PoolFamily::O1 => (&[RY, RZ], &[H], &[CZ]),
            PoolFamily::O2 => (&[RY, RZ], &[H], &[CNOT]),
            PoolFamily::O3 => (&[RY, RZ], &[H], &[CZ, CNOT]),
            PoolFamily::O4 => (&[U3], &[H], &[CU3]),
            PoolFamily::Of1 => (&[], &[X, T], &[]),
            PoolFamily::Of2 => (&[], &[X, T], &[CNOT, CZ]),
        }
    }

    fn short(self) -> &'static str {
        match self {
            PoolFamily::O1 => "1",
            PoolFamily::O2 => "2",
            PoolFamily::O3 => "3",
            PoolFamily::O4 => "4",
            PoolFamily::Of1 => "f1",
            PoolFamily::Of2 => "f2",
        }
    }

    pub fn is_fixed(self) -> bool {
        matches!(self, PoolFamily::Of1 | PoolFamily::Of2)
    }
}

impl FromStr for PoolFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "o1" | "op1" => Ok(PoolFamily::O1),
            "o2" | "op2" => Ok(PoolFamily::O2),
            "o3" | "op3" => Ok(PoolFamily::O3),
            "o4" | "op4" => Ok(PoolFamily::O4),
            "of1" | "opf1" => Ok(PoolFamily::Of1),
            "of2" | "opf2" => Ok(PoolFamily::Of2),
            _ => Err(Error::InvalidPool(format!("unknown pool family `{s}`"))),
        }
    }
}

/// Construction switches not implied by the family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct PoolOptions {
    /// Controlled operations range over all `n` qubits (closing the ladder
    /// back onto qubit 0) instead of the default `[0, n − 2]`.
    pub full_range_entanglers: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OperationPool {
    pub n_qubits: usize,
    pub ops: Vec<Operation>,
    pub name: String,
}

impl OperationPool {
    /// Pool from explicit operations, validated against `n_qubits`.
    pub fn from_ops(n_qubits: usize, ops: Vec<Operation>, name: impl Into<String>) -> Result<Self> {
        if n_qubits == 0 {
            return Err(Error::InvalidPool("pool needs at least one qubit".into()));
        }
        if ops.is_empty() {
            return Err(Error::InvalidPool("pool is empty".into()));
        }
        if ops.iter().filter(|o| o.is_identity()).count() > 1 {
            return Err(Error::InvalidPool("more than one E operation".into()));
        }
        for op in &ops {
            op.validate(n_qubits)?;
        }
        Ok(Self {
            n_qubits,
            ops,
            name: name.into(),
        })
    }

    /// Pool from labels like `["U3:[0,1]", "E:[0,1]"]`.
    pub fn from_labels<S: AsRef<str>>(n_qubits: usize, labels: &[S], name: impl Into<String>) -> Result<Self> {
        let ops = labels
            .iter()
            .map(|l| l.as_ref().parse())
            .collect::<Result<Vec<Operation>>>()?;
        Self::from_ops(n_qubits, ops, name)
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    pub fn labels(&self) -> Vec<String> {
        self.ops.iter().map(Operation::label).collect()
    }

    pub fn identity_index(&self) -> Option<usize> {
        self.ops.iter().position(Operation::is_identity)
    }
}

/// Builds pool `family` of size `size_index` on `n_qubits` qubits.
pub fn build_pool(family: PoolFamily, size_index: usize, n_qubits: usize) -> Result<OperationPool> {
    build_pool_with(family, size_index, n_qubits, PoolOptions::default())
}

pub fn build_pool_with(
    family: PoolFamily,
    size_index: usize,
    n_qubits: usize,
    options: PoolOptions,
) -> Result<OperationPool> {
    let (param_singles, fixed_singles, controlled) = family.gate_types();
    if family.is_fixed() {
        if n_qubits != 3 || size_index != 1 {
            return Err(Error::InvalidPool(format!(
                "pool O{} is defined for 3 qubits and size 1 only",
                family.short()
            )));
        }
        let mut ops = Vec::new();
        for &g in fixed_singles {
            ops.extend((0..3).map(|q| Operation::gate(g, [q])));
        }
        for &g in controlled {
            ops.extend((0..3).map(|q| Operation::gate(g, [q])));
            ops.push(Operation::gate(g, [0, 1, 2]));
        }
        ops.push(Operation::identity([0, 1, 2]));
        return OperationPool::from_ops(3, ops, format!("op{}", family.short()));
    }
    if n_qubits < 2 || size_index == 0 || size_index > n_qubits - 1 {
        return Err(Error::InvalidPool(format!(
            "size {size_index} is outside 1..={} for {n_qubits} qubits",
            n_qubits.saturating_sub(1)
        )));
    }
    let full: Vec<usize> = (0..n_qubits).collect();
    let mut ops = Vec::new();
    for len in (2..=n_qubits).rev() {
        for start in 0..=n_qubits - len {
            let range: Vec<usize> = (start..start + len).collect();
            for &g in param_singles {
                ops.push(Operation::gate(g, range.clone()));
            }
            if len == n_qubits {
                for &g in fixed_singles {
                    ops.push(Operation::gate(g, range.clone()));
                }
            }
        }
    }
    let entangle_range: Vec<usize> = if options.full_range_entanglers {
        full.clone()
    } else {
        (0..n_qubits - 1).collect()
    };
    for &g in controlled {
        ops.push(Operation::gate(g, entangle_range.clone()));
    }
    ops.push(Operation::identity(full));
    let mut pool = OperationPool::from_ops(n_qubits, ops, format!("op{}-1", family.short()))?;
    for _ in 1..size_index {
        pool = shrink_pool(&pool)?;
    }
    pool.name = format!("op{}-{size_index}", family.short());
    Ok(pool)
}

/// Removes every single-qubit operation whose working range has the
/// current minimal length.
pub fn shrink_pool(pool: &OperationPool) -> Result<OperationPool> {
    let lengths: Vec<usize> = pool
        .ops
        .iter()
        .filter(|o| o.is_single_qubit())
        .map(|o| o.range.len())
        .collect();
    let (Some(&min), Some(&max)) = (lengths.iter().min(), lengths.iter().max()) else {
        return Err(Error::NothingToShrink);
    };
    if min == max {
        return Err(Error::NothingToShrink);
    }
    let ops = pool
        .ops
        .iter()
        .filter(|o| !(o.is_single_qubit() && o.range.len() == min))
        .cloned()
        .collect();
    let name = match pool.name.rsplit_once('-') {
        Some((stem, idx)) => match idx.parse::<usize>() {
            Ok(i) => format!("{stem}-{}", i + 1),
            Err(_) => format!("{}'", pool.name),
        },
        None => format!("{}'", pool.name),
    };
    Ok(OperationPool {
        n_qubits: pool.n_qubits,
        ops,
        name,
    })
}

/// Fixed gates placed before the placeholders.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Encoding {
    #[default]
    None,
    /// `RX(π)` on every qubit.
    RxPi,
    /// `H` on every qubit.
    HLayer,
    /// `X` on every qubit.
    XLayer,
}

impl FromStr for Encoding {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "none" => Ok(Encoding::None),
            "rx_pi" | "rx-pi" => Ok(Encoding::RxPi),
            "h_layer" | "h-layer" => Ok(Encoding::HLayer),
            "x_layer" | "x-layer" => Ok(Encoding::XLayer),
            _ => Err(Error::InvalidPool(format!("unknown encoding `{s}`"))),
        }
    }
}

/// Placement of the placeholders around a QFT block.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QftPlacement {
    /// All placeholders before the QFT.
    Front,
    /// All placeholders after the QFT.
    Back,
    /// The first ⌈p/2⌉ placeholders before the QFT, the rest after.
    BackAndFront,
}

impl FromStr for QftPlacement {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace(['-', ' '], "_").as_str() {
            "front" => Ok(QftPlacement::Front),
            "back" => Ok(QftPlacement::Back),
            "back_and_front" | "front_and_back" => Ok(QftPlacement::BackAndFront),
            _ => Err(Error::InvalidPool(format!("unknown QFT placement `{s}`"))),
        }
    }
}

/// Scaffold around the placeholder sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlockLayout {
    pub encoding: Encoding,
    pub qft: Option<QftPlacement>,
    /// Repetitions of the placeholder sequence; blocks share the structure
    /// but own distinct parameter slots.
    pub blocks: usize,
}

impl Default for BlockLayout {
    fn default() -> Self {
        Self {
            encoding: Encoding::None,
            qft: None,
            blocks: 1,
        }
    }
}

impl BlockLayout {
    pub fn rx_pi() -> Self {
        Self {
            encoding: Encoding::RxPi,
            ..Self::default()
        }
    }

    pub fn h_layer() -> Self {
        Self {
            encoding: Encoding::HLayer,
            ..Self::default()
        }
    }

    /// `X` layer, then placeholders around a QFT per `placement`.
    pub fn qft_sandwich(placement: QftPlacement) -> Self {
        Self {
            encoding: Encoding::XLayer,
            qft: Some(placement),
            blocks: 1,
        }
    }

    pub fn with_blocks(mut self, blocks: usize) -> Self {
        self.blocks = blocks;
        self
    }

    fn encoding_gates(&self, n: usize) -> Vec<GateInstance> {
        (0..n)
            .filter_map(|q| match self.encoding {
                Encoding::None => None,
                Encoding::RxPi => Some(GateInstance::with_fixed(
                    GateKind::RX,
                    vec![q],
                    vec![std::f64::consts::PI],
                )),
                Encoding::HLayer => Some(GateInstance::new(GateKind::H, vec![q])),
                Encoding::XLayer => Some(GateInstance::new(GateKind::X, vec![q])),
            })
            .map(GateInstance::as_template)
            .collect()
    }

    /// The scaffold with every placeholder left empty.
    pub fn reference_circuit(&self, n_qubits: usize) -> CircuitIR {
        let mut c = CircuitIR::new(n_qubits);
        c.extend(self.encoding_gates(n_qubits));
        if self.qft.is_some() {
            c.extend(build_qft(n_qubits).gates.into_iter().map(GateInstance::as_template));
        }
        c
    }
}

/// Parameter slots used by one placeholder expansion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SlotSpan {
    pub block: usize,
    pub placeholder: usize,
    pub op: usize,
    pub start: usize,
    pub len: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AssembledCircuit {
    pub circuit: CircuitIR,
    /// One entry per placeholder expansion, in slot order.
    pub spans: Vec<SlotSpan>,
}

/// Assembles the circuit for structure `k`: the layout's scaffold with the
/// operations `k[0..p]` expanded `blocks` times in order.
pub fn assemble_circuit(k: &[usize], pool: &OperationPool, layout: &BlockLayout) -> Result<AssembledCircuit> {
    for (i, &j) in k.iter().enumerate() {
        if j >= pool.len() {
            return Err(Error::StructureIndex {
                placeholder: i,
                index: j,
                pool_size: pool.len(),
            });
        }
    }
    let n = pool.n_qubits;
    let total = k.len() * layout.blocks;
    let split = match layout.qft {
        None | Some(QftPlacement::Front) => total,
        Some(QftPlacement::Back) => 0,
        Some(QftPlacement::BackAndFront) => total.div_ceil(2),
    };
    let mut circuit = CircuitIR::new(n);
    circuit.extend(layout.encoding_gates(n));
    let mut spans = Vec::with_capacity(total);
    let mut slot = 0;
    let mut seq = 0;
    if layout.qft.is_some() && split == 0 {
        circuit.extend(build_qft(n).gates.into_iter().map(GateInstance::as_template));
    }
    for block in 0..layout.blocks {
        for (placeholder, &op) in k.iter().enumerate() {
            let operation = &pool.ops[op];
            let len = operation.param_slots();
            circuit.extend(operation.expand(n, slot));
            spans.push(SlotSpan {
                block,
                placeholder,
                op,
                start: slot,
                len,
            });
            slot += len;
            seq += 1;
            if layout.qft.is_some() && seq == split {
                circuit.extend(build_qft(n).gates.into_iter().map(GateInstance::as_template));
            }
        }
    }
    circuit.n_params = slot;
    Ok(AssembledCircuit { circuit, spans })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct GateCounts {
    pub total: usize,
    pub parameterized: usize,
    pub controlled: usize,
}

/// Gate tallies over the non-template part of a circuit.
pub fn gate_counts(circuit: &CircuitIR) -> GateCounts {
    circuit
        .gates
        .iter()
        .filter(|g| !g.template && g.kind != GateKind::Idle)
        .fold(GateCounts::default(), |mut c, g| {
            c.total += 1;
            c.parameterized += usize::from(g.kind.is_parameterized());
            c.controlled += usize::from(g.kind.is_controlled());
            c
        })
}

/// Hardware-efficient reference ansatz: `RY` on every qubit, a `CZ`
/// chain, `RZ` on every qubit, another `CZ` chain. On five qubits this
/// is 18 gates, 10 of them parameterized and 8 controlled.
pub fn hardware_efficient_baseline(n_qubits: usize, encoding: Encoding) -> CircuitIR {
    let layout = BlockLayout {
        encoding,
        ..BlockLayout::default()
    };
    let mut c = layout.reference_circuit(n_qubits);
    for rot in [GateKind::RY, GateKind::RZ] {
        for q in 0..n_qubits {
            c.push(GateInstance::new(rot, vec![q]));
        }
        for q in 0..n_qubits.saturating_sub(1) {
            c.push(GateInstance::new(GateKind::CZ, vec![q, q + 1]));
        }
    }
    c
}
