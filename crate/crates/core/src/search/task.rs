use rand::Rng;

use crate::error::{Error, Result};
use crate::objective::DiagonalHamiltonian;
use crate::pools::{assemble_circuit, AssembledCircuit, BlockLayout, OperationPool, SlotSpan};
use crate::sim::{
    adjoint_gradient, expectation_diag, fidelity, parameter_shift_with, run_circuit, run_noisy, CircuitIR, NoiseSpec,
    QuantumState, StateVector,
};

/// What a circuit is scored against.
#[derive(Debug, Clone, PartialEq)]
pub enum Objective {
    /// Scaled energy `(E − E_min)/(E_max − E_min)` of a diagonal Hamiltonian.
    Energy(DiagonalHamiltonian),
    /// `1 − fidelity` with a fixed ideal output state.
    Infidelity(StateVector),
}

/// Pool, scaffold and objective for one search problem.
#[derive(Debug, Clone, PartialEq)]
pub struct Task {
    pub pool: OperationPool,
    pub layout: BlockLayout,
    pub objective: Objective,
    /// When set, circuits are scored on the density-matrix simulator.
    pub noise: Option<NoiseSpec>,
}

impl Task {
    pub fn new(pool: OperationPool, layout: BlockLayout, objective: Objective) -> Result<Self> {
        let n = match &objective {
            Objective::Energy(h) => h.n_qubits(),
            Objective::Infidelity(s) => s.n_qubits(),
        };
        if n != pool.n_qubits {
            return Err(Error::DimensionMismatch {
                expected: pool.n_qubits,
                got: n,
            });
        }
        if layout.blocks == 0 {
            return Err(Error::SearchConfig("layout needs at least one block".into()));
        }
        Ok(Self {
            pool,
            layout,
            objective,
            noise: None,
        })
    }

    pub fn with_noise(mut self, noise: NoiseSpec) -> Self {
        self.noise = if noise.is_noiseless() { None } else { Some(noise) };
        self
    }

    pub fn n_qubits(&self) -> usize {
        self.pool.n_qubits
    }

    pub fn assemble(&self, k: &[usize]) -> Result<AssembledCircuit> {
        assemble_circuit(k, &self.pool, &self.layout)
    }

    fn initial(&self) -> QuantumState {
        QuantumState::zero(self.n_qubits())
    }

    /// Output state of `circuit`, mixed when the task is noisy.
    pub fn output_state(&self, circuit: &CircuitIR, params: &[f64]) -> Result<QuantumState> {
        match &self.noise {
            None => run_circuit(circuit, params, &self.initial()),
            Some(noise) => Ok(QuantumState::Mixed(run_noisy(circuit, params, noise, &self.initial())?)),
        }
    }

    /// Loss of `circuit` at `params`, in `[0, 1]`.
    pub fn loss(&self, circuit: &CircuitIR, params: &[f64]) -> Result<f64> {
        let state = self.output_state(circuit, params)?;
        match &self.objective {
            Objective::Energy(h) => h.scale_energy_clamped(expectation_diag(&state, h.diag())?),
            Objective::Infidelity(ideal) => Ok(1.0 - fidelity(&QuantumState::Pure(ideal.clone()), &state)?),
        }
    }

    /// Unscaled energy, for reporting.
    pub fn raw_energy(&self, circuit: &CircuitIR, params: &[f64]) -> Result<Option<f64>> {
        match &self.objective {
            Objective::Energy(h) => Ok(Some(expectation_diag(&self.output_state(circuit, params)?, h.diag())?)),
            Objective::Infidelity(_) => Ok(None),
        }
    }

    /// Loss and its gradient over the circuit's parameter slots.
    ///
    /// Noiseless energies use the adjoint sweep (gradient of `E`, divided by
    /// the energy span). Everything else uses parameter shifting, which is
    /// exact for any objective linear in the output density matrix.
    pub fn loss_and_grad(&self, circuit: &CircuitIR, params: &[f64]) -> Result<(f64, Vec<f64>)> {
        match (&self.objective, &self.noise) {
            (Objective::Energy(h), None) => {
                let (e, g) = adjoint_gradient(circuit, params, &StateVector::zero(self.n_qubits()), h.diag())?;
                let span = h.span()?;
                Ok((h.scale_energy_clamped(e)?, g.into_iter().map(|v| v / span).collect()))
            }
            _ => {
                let loss = self.loss(circuit, params)?;
                let grad = if circuit.n_params == 0 {
                    Vec::new()
                } else {
                    parameter_shift_with(circuit, params, |p| self.loss(circuit, p))?
                };
                Ok((loss, grad))
            }
        }
    }
}

/// Circuit parameters for every (block, placeholder, op) triple.
///
/// A sampled structure reads the vectors of the ops it uses, so an op
/// keeps its trained angles between the steps that sample it.
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterPool {
    theta: Vec<Vec<Vec<Vec<f64>>>>,
}

impl ParameterPool {
    /// Angles drawn uniformly from `[−half_width, half_width)`, in block,
    /// placeholder, op order.
    pub fn random<R: Rng + ?Sized>(
        pool: &OperationPool,
        placeholders: usize,
        blocks: usize,
        half_width: f64,
        rng: &mut R,
    ) -> Self {
        let theta = (0..blocks)
            .map(|_| {
                (0..placeholders)
                    .map(|_| {
                        pool.ops
                            .iter()
                            .map(|op| {
                                (0..op.param_slots())
                                    .map(|_| (2.0 * rng.random::<f64>() - 1.0) * half_width)
                                    .collect()
                            })
                            .collect()
                    })
                    .collect()
            })
            .collect();
        Self { theta }
    }

    pub fn get(&self, block: usize, placeholder: usize, op: usize) -> &[f64] {
        &self.theta[block][placeholder][op]
    }

    pub fn get_mut(&mut self, block: usize, placeholder: usize, op: usize) -> &mut [f64] {
        &mut self.theta[block][placeholder][op]
    }

    /// Flat parameter vector for an assembled circuit.
    pub fn gather(&self, spans: &[SlotSpan]) -> Vec<f64> {
        let mut out = Vec::with_capacity(spans.iter().map(|s| s.len).sum());
        for s in spans {
            out.extend_from_slice(self.get(s.block, s.placeholder, s.op));
        }
        out
    }

    /// `θ += scale · grad`, routed back through the spans.
    pub fn add_scaled(&mut self, spans: &[SlotSpan], grad: &[f64], scale: f64) {
        for s in spans {
            for (t, g) in self
                .get_mut(s.block, s.placeholder, s.op)
                .iter_mut()
                .zip(&grad[s.start..s.start + s.len])
            {
                *t += scale * g;
            }
        }
    }

    /// Every angle in a fixed order, for hashing and comparison.
    pub fn flatten(&self) -> Vec<f64> {
        self.theta.iter().flatten().flatten().flatten().copied().collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objective::{benchmark_graph, maxcut_hamiltonian, BenchmarkGraph};
    use crate::pools::{build_pool, PoolFamily};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{PI, TAU};

    fn energy_task() -> Task {
        let h = DiagonalHamiltonian::new((0..32).map(|i| ((i * 7) % 11) as f64 - 3.0).collect()).unwrap();
        Task::new(
            build_pool(PoolFamily::O4, 2, 5).unwrap(),
            BlockLayout::default(),
            Objective::Energy(h),
        )
        .unwrap()
    }

    #[test]
    fn identity_structure_scores_the_zero_state() {
        let task = energy_task();
        let e = task.pool.identity_index().unwrap();
        let asm = task.assemble(&[e; 4]).unwrap();
        let Objective::Energy(h) = &task.objective else {
            unreachable!()
        };
        let want = (h.diag()[0] - h.e_min()) / (h.e_max() - h.e_min());
        assert!((task.loss(&asm.circuit, &[]).unwrap() - want).abs() < 1e-15);
    }

    #[test]
    fn losses_stay_in_unit_interval() {
        let task = energy_task();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20 {
            let k: Vec<usize> = (0..4).map(|_| rng.random_range(0..task.pool.len())).collect();
            let asm = task.assemble(&k).unwrap();
            let params: Vec<f64> = (0..asm.circuit.n_params).map(|_| rng.random::<f64>() * TAU).collect();
            let l = task.loss(&asm.circuit, &params).unwrap();
            assert!((0.0..=1.0).contains(&l));
        }
    }

    #[test]
    fn constant_hamiltonian_is_rejected() {
        assert!(DiagonalHamiltonian::new(vec![1.0; 4]).and_then(|h| h.span()).is_err());
    }

    #[test]
    fn adjoint_and_shift_paths_agree() {
        let g = benchmark_graph(BenchmarkGraph::Ladder);
        let h = maxcut_hamiltonian(&g).unwrap();
        let pool = build_pool(PoolFamily::O3, 3, 8).unwrap();
        let task = Task::new(pool, BlockLayout::h_layer(), Objective::Energy(h)).unwrap();
        let asm = task.assemble(&[0, 1, 2, 0]).unwrap();
        let params: Vec<f64> = (0..asm.circuit.n_params).map(|i| 0.2 + 0.31 * i as f64).collect();
        let (l, g_adj) = task.loss_and_grad(&asm.circuit, &params).unwrap();
        let g_ps = parameter_shift_with(&asm.circuit, &params, |p| task.loss(&asm.circuit, p)).unwrap();
        assert!((l - task.loss(&asm.circuit, &params).unwrap()).abs() < 1e-14);
        for (a, b) in g_adj.iter().zip(&g_ps) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn parameter_pool_round_trip() {
        let task = energy_task();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut theta = ParameterPool::random(&task.pool, 4, 2, PI, &mut rng);
        assert!(theta.flatten().iter().all(|t| (-PI..PI).contains(t)));
        let layout = BlockLayout::default().with_blocks(2);
        let asm = assemble_circuit(&[0, 0, 1, 2], &task.pool, &layout).unwrap();
        let flat = theta.gather(&asm.spans);
        assert_eq!(flat.len(), asm.circuit.n_params);
        let before = theta.clone();
        let grad = vec![1.0; flat.len()];
        theta.add_scaled(&asm.spans, &grad, -0.5);
        // placeholders 0 and 1 both use op 0 but own separate vectors
        let a = before.get(0, 0, 0);
        let b = theta.get(0, 0, 0);
        assert!(a.iter().zip(b).all(|(x, y)| (x - 0.5 - y).abs() < 1e-15));
        assert_eq!(theta.get(0, 3, 0), before.get(0, 3, 0));
    }
}
