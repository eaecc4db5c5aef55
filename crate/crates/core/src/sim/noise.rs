//! Single-qubit Kraus channels and the noise models built from them.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64 as C64;

use super::circuit::{apply_gate, CircuitIR, GateInstance};
use super::gates::{GateKind, Matrix2};
use super::state::{DensityMatrix, QuantumState};
use crate::error::{Error, Result};

const ZERO: C64 = C64::new(0.0, 0.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ChannelKind {
    BitFlip,
    PhaseDamping,
    AmplitudeDamping,
    Depolarizing,
}

impl ChannelKind {
    pub fn name(self) -> &'static str {
        match self {
            ChannelKind::BitFlip => "bitflip",
            ChannelKind::PhaseDamping => "phasedamping",
            ChannelKind::AmplitudeDamping => "amplitudedamping",
            ChannelKind::Depolarizing => "depolarizing",
        }
    }
}

impl fmt::Display for ChannelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ChannelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key: String = s
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .collect::<String>()
            .to_ascii_lowercase();
        match key.as_str() {
            "bitflip" => Ok(ChannelKind::BitFlip),
            "phasedamping" | "dephasing" => Ok(ChannelKind::PhaseDamping),
            "amplitudedamping" => Ok(ChannelKind::AmplitudeDamping),
            "depolarizing" | "depolarizingchannel" => Ok(ChannelKind::Depolarizing),
            _ => Err(Error::UnknownChannel(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KrausChannel {
    pub kind: ChannelKind,
    pub probability: f64,
    pub kraus_ops: Vec<Matrix2>,
}

fn re(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// Builds the Kraus operators of a single-qubit channel.
///
/// Depolarizing splits `p` evenly over X, Y and Z. The damping channels
/// use `p` as the damping parameter γ. Operators with zero weight are
/// dropped, so probability 0 yields the single operator `I`.
pub fn make_channel(kind: ChannelKind, probability: f64) -> Result<KrausChannel> {
    if !(0.0..=1.0).contains(&probability) || probability.is_nan() {
        return Err(Error::ProbabilityOutOfRange(probability));
    }
    let p = probability;
    let ops: Vec<Matrix2> = match kind {
        ChannelKind::BitFlip => vec![
            [[re((1.0 - p).sqrt()), ZERO], [ZERO, re((1.0 - p).sqrt())]],
            [[ZERO, re(p.sqrt())], [re(p.sqrt()), ZERO]],
        ],
        ChannelKind::Depolarizing => {
            let w = (p / 3.0).sqrt();
            vec![
                [[re((1.0 - p).sqrt()), ZERO], [ZERO, re((1.0 - p).sqrt())]],
                [[ZERO, re(w)], [re(w), ZERO]],
                [[ZERO, C64::new(0.0, -w)], [C64::new(0.0, w), ZERO]],
                [[re(w), ZERO], [ZERO, re(-w)]],
            ]
        }
        ChannelKind::PhaseDamping => vec![
            [[re(1.0), ZERO], [ZERO, re((1.0 - p).sqrt())]],
            [[ZERO, ZERO], [ZERO, re(p.sqrt())]],
        ],
        ChannelKind::AmplitudeDamping => vec![
            [[re(1.0), ZERO], [ZERO, re((1.0 - p).sqrt())]],
            [[ZERO, re(p.sqrt())], [ZERO, ZERO]],
        ],
    };
    let kraus_ops = ops
        .into_iter()
        .filter(|k| k.iter().flatten().any(|z| z.norm() > 0.0))
        .collect();
    Ok(KrausChannel {
        kind,
        probability,
        kraus_ops,
    })
}

impl KrausChannel {
    /// `max |Σ K†K − I|`
    pub fn completeness_defect(&self) -> f64 {
        let mut sum = [[ZERO; 2]; 2];
        for k in &self.kraus_ops {
            for i in 0..2 {
                for j in 0..2 {
                    sum[i][j] += k[0][i].conj() * k[0][j] + k[1][i].conj() * k[1][j];
                }
            }
        }
        let mut worst: f64 = 0.0;
        for (i, row) in sum.iter().enumerate() {
            for (j, z) in row.iter().enumerate() {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((z - re(target)).norm());
            }
        }
        worst
    }
}

/// `ρ ← Σ_m K_m ρ K_m†` on `qubit`. Pure inputs are rejected.
pub fn apply_channel(state: &mut QuantumState, channel: &KrausChannel, qubit: usize) -> Result<()> {
    match state {
        QuantumState::Pure(_) => Err(Error::PureStateChannel),
        QuantumState::Mixed(rho) => rho.apply_kraus(qubit, &channel.kraus_ops),
    }
}

/// Which gates receive the after-gate channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GateScope {
    #[default]
    All,
    /// Only gates expanded from placeholders (non-template gates).
    Placeholders,
}

/// Where channels are inserted during a noisy run.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct NoiseSpec {
    pub after_gate: Option<KrausChannel>,
    pub after_gate_scope: GateScope,
    /// Applied once per circuit layer to each qubit the layer leaves untouched.
    pub idle: Option<KrausChannel>,
    /// Applied to every qubit before the first gate.
    pub initial: Option<KrausChannel>,
    /// Applied to every qubit after the last gate.
    pub terminal: Option<KrausChannel>,
}

/// Noise model names accepted by [`NoiseSpec::from_model`].
pub const NOISE_MODELS: [&str; 5] = ["terminal", "both-ends", "after-gate", "idle", "placeholder-terminal"];

impl NoiseSpec {
    pub fn noiseless() -> Self {
        Self::default()
    }

    /// Named model with main channel probability `p`. `gate_p` is the
    /// per-gate probability used by the composite models.
    ///
    /// * `terminal`: `p` on every qubit after the last gate.
    /// * `both-ends`: `p` on every qubit before the first and after the last gate.
    /// * `after-gate`: `p` on each gate's qubits after the gate.
    /// * `idle`: `gate_p` after each gate plus `p` on idle qubits per layer.
    /// * `placeholder-terminal`: `gate_p` after each placeholder gate plus
    ///   `p` on every qubit at the end.
    pub fn from_model(model: &str, kind: ChannelKind, p: f64, gate_p: f64) -> Result<Self> {
        let main = make_channel(kind, p)?;
        let spec = match model {
            "terminal" => NoiseSpec {
                terminal: Some(main),
                ..Self::default()
            },
            "both-ends" => NoiseSpec {
                initial: Some(main.clone()),
                terminal: Some(main),
                ..Self::default()
            },
            "after-gate" => NoiseSpec {
                after_gate: Some(main),
                ..Self::default()
            },
            "idle" => NoiseSpec {
                after_gate: Some(make_channel(kind, gate_p)?),
                idle: Some(main),
                ..Self::default()
            },
            "placeholder-terminal" => NoiseSpec {
                after_gate: Some(make_channel(kind, gate_p)?),
                after_gate_scope: GateScope::Placeholders,
                terminal: Some(main),
                ..Self::default()
            },
            other => return Err(Error::UnknownNoiseModel(other.to_string())),
        };
        Ok(spec)
    }

    pub fn is_noiseless(&self) -> bool {
        [&self.after_gate, &self.idle, &self.initial, &self.terminal]
            .iter()
            .all(|c| c.is_none())
    }
}

/// Greedy left-to-right layering: each gate lands one layer after the
/// latest layer touching any of its qubits. `Idle` gates occupy nothing.
pub fn circuit_layers(circuit: &CircuitIR) -> Vec<Vec<usize>> {
    let mut frontier = vec![0usize; circuit.n_qubits];
    let mut layers: Vec<Vec<usize>> = Vec::new();
    for (i, g) in circuit.gates.iter().enumerate() {
        if g.kind == GateKind::Idle {
            continue;
        }
        let layer = g.qubits.iter().map(|&q| frontier[q]).max().unwrap_or(0);
        if layers.len() <= layer {
            layers.resize_with(layer + 1, Vec::new);
        }
        layers[layer].push(i);
        for &q in &g.qubits {
            frontier[q] = layer + 1;
        }
    }
    layers
}

fn gate_then_noise(state: &mut QuantumState, gate: &GateInstance, params: &[f64], spec: &NoiseSpec) -> Result<()> {
    apply_gate(state, gate, params)?;
    if gate.kind == GateKind::Idle {
        return Ok(());
    }
    if let Some(ch) = &spec.after_gate {
        if spec.after_gate_scope == GateScope::All || !gate.template {
            for &q in &gate.qubits {
                apply_channel(state, ch, q)?;
            }
        }
    }
    Ok(())
}

/// Runs `circuit` on a density matrix, interleaving channels per `spec`.
pub fn run_noisy(
    circuit: &CircuitIR,
    params: &[f64],
    spec: &NoiseSpec,
    initial: &QuantumState,
) -> Result<DensityMatrix> {
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
    let n = circuit.n_qubits;
    let mut state = QuantumState::Mixed(initial.clone().into_mixed());
    if let Some(ch) = &spec.initial {
        for q in 0..n {
            apply_channel(&mut state, ch, q)?;
        }
    }
    match &spec.idle {
        None => {
            for g in &circuit.gates {
                gate_then_noise(&mut state, g, params, spec)?;
            }
        }
        Some(idle) => {
            let mut busy = vec![false; n];
            for layer in circuit_layers(circuit) {
                busy.iter_mut().for_each(|b| *b = false);
                for &gi in &layer {
                    let g = &circuit.gates[gi];
                    gate_then_noise(&mut state, g, params, spec)?;
                    for &q in &g.qubits {
                        busy[q] = true;
                    }
                }
                for q in (0..n).filter(|&q| !busy[q]) {
                    apply_channel(&mut state, idle, q)?;
                }
            }
        }
    }
    if let Some(ch) = &spec.terminal {
        for q in 0..n {
            apply_channel(&mut state, ch, q)?;
        }
    }
    Ok(state.into_mixed())
}
