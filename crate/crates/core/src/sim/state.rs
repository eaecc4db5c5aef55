//! Pure and mixed register states.
//!
//! Qubit 0 is the most significant bit of a basis index: on three qubits,
//! `|q0 q1 q2⟩ = |100⟩` is index 4.
//!
//! A density matrix over `n` qubits is stored row-major and handled as a
//! `2n`-qubit amplitude vector, rows first. An operator `K` on qubit `q`
//! acts on the row index as virtual qubit `q` and `conj(K)` acts on the
//! column index as virtual qubit `n + q`, which gives `K ρ K†` with the
//! same kernels used for statevectors.

use num_complex::Complex64 as C64;
use rand::Rng;

use super::gates::{GateMatrix, Matrix2, Matrix4};
use crate::error::{Error, Result};

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

#[inline]
fn bit(n_total: usize, q: usize) -> usize {
    1 << (n_total - 1 - q)
}

pub(crate) fn apply_1q(amps: &mut [C64], n_total: usize, q: usize, m: &Matrix2) {
    let stride = bit(n_total, q);
    let block = stride << 1;
    for base in (0..amps.len()).step_by(block) {
        for i in base..base + stride {
            let a0 = amps[i];
            let a1 = amps[i + stride];
            amps[i] = m[0][0] * a0 + m[0][1] * a1;
            amps[i + stride] = m[1][0] * a0 + m[1][1] * a1;
        }
    }
}

pub(crate) fn apply_2q(amps: &mut [C64], n_total: usize, q0: usize, q1: usize, m: &Matrix4) {
    let b0 = bit(n_total, q0);
    let b1 = bit(n_total, q1);
    let mask = b0 | b1;
    for i in 0..amps.len() {
        if i & mask != 0 {
            continue;
        }
        let idx = [i, i | b1, i | b0, i | b0 | b1];
        let v = idx.map(|k| amps[k]);
        for (r, &k) in idx.iter().enumerate() {
            amps[k] = m[r][0] * v[0] + m[r][1] * v[1] + m[r][2] * v[2] + m[r][3] * v[3];
        }
    }
}

/// Applies `m` to `qubits` of an `n_total`-qubit amplitude vector.
pub(crate) fn apply_matrix(amps: &mut [C64], n_total: usize, qubits: &[usize], m: &GateMatrix) {
    match m {
        GateMatrix::Identity => {}
        GateMatrix::One(u) => apply_1q(amps, n_total, qubits[0], u),
        GateMatrix::Two(u) => apply_2q(amps, n_total, qubits[0], qubits[1], u),
    }
}

fn check_qubits(qubits: &[usize], n_qubits: usize) -> Result<()> {
    for (i, &q) in qubits.iter().enumerate() {
        if q >= n_qubits {
            return Err(Error::QubitOutOfRange { qubit: q, n_qubits });
        }
        if qubits[..i].contains(&q) {
            return Err(Error::RepeatedQubit(q));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n_qubits: usize,
    amps: Vec<C64>,
}

impl StateVector {
    /// `|0…0⟩`
    pub fn zero(n_qubits: usize) -> Self {
        Self::basis(n_qubits, 0)
    }

    pub fn basis(n_qubits: usize, index: usize) -> Self {
        let mut amps = vec![ZERO; 1 << n_qubits];
        amps[index] = ONE;
        Self { n_qubits, amps }
    }

    /// Wraps raw amplitudes; the length must be a power of two.
    pub fn from_amplitudes(amps: Vec<C64>) -> Result<Self> {
        let len = amps.len();
        if len == 0 || !len.is_power_of_two() {
            return Err(Error::DimensionMismatch {
                expected: len.next_power_of_two().max(1),
                got: len,
            });
        }
        Ok(Self {
            n_qubits: len.trailing_zeros() as usize,
            amps,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    pub fn inner(&self, other: &StateVector) -> Result<C64> {
        if self.amps.len() != other.amps.len() {
            return Err(Error::DimensionMismatch {
                expected: self.amps.len(),
                got: other.amps.len(),
            });
        }
        Ok(self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum())
    }

    pub fn apply(&mut self, qubits: &[usize], m: &GateMatrix) -> Result<()> {
        check_qubits(qubits, self.n_qubits)?;
        apply_matrix(&mut self.amps, self.n_qubits, qubits, m);
        Ok(())
    }

    pub(crate) fn amps_mut(&mut self) -> &mut [C64] {
        &mut self.amps
    }

    /// Outer product `|ψ⟩⟨ψ|`.
    pub fn to_density(&self) -> DensityMatrix {
        let dim = self.amps.len();
        let mut data = vec![ZERO; dim * dim];
        for (r, a) in self.amps.iter().enumerate() {
            for (c, b) in self.amps.iter().enumerate() {
                data[r * dim + c] = a * b.conj();
            }
        }
        DensityMatrix {
            n_qubits: self.n_qubits,
            data,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    n_qubits: usize,
    data: Vec<C64>,
}

impl DensityMatrix {
    pub fn zero(n_qubits: usize) -> Self {
        StateVector::zero(n_qubits).to_density()
    }

    /// Wraps a row-major `dim × dim` matrix.
    pub fn from_row_major(dim: usize, data: Vec<C64>) -> Result<Self> {
        if dim == 0 || !dim.is_power_of_two() || data.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                got: data.len(),
            });
        }
        Ok(Self {
            n_qubits: dim.trailing_zeros() as usize,
            data,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        1 << self.n_qubits
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.data[row * self.dim() + col]
    }

    pub fn as_row_major(&self) -> &[C64] {
        &self.data
    }

    pub fn diagonal(&self) -> Vec<f64> {
        let dim = self.dim();
        (0..dim).map(|i| self.data[i * dim + i].re).collect()
    }

    pub fn trace(&self) -> C64 {
        let dim = self.dim();
        (0..dim).map(|i| self.data[i * dim + i]).sum()
    }

    /// Largest `|ρ_ij − conj(ρ_ji)|`.
    pub fn hermiticity_defect(&self) -> f64 {
        let dim = self.dim();
        let mut worst: f64 = 0.0;
        for r in 0..dim {
            for c in r..dim {
                worst = worst.max((self.data[r * dim + c] - self.data[c * dim + r].conj()).norm());
            }
        }
        worst
    }

    /// `ρ ← U ρ U†` for a unitary (or any operator) on `qubits`.
    pub fn apply(&mut self, qubits: &[usize], m: &GateMatrix) -> Result<()> {
        check_qubits(qubits, self.n_qubits)?;
        self.conjugate_by(qubits, m);
        Ok(())
    }

    pub(crate) fn conjugate_by(&mut self, qubits: &[usize], m: &GateMatrix) {
        let n = self.n_qubits;
        apply_matrix(&mut self.data, 2 * n, qubits, m);
        let cols: Vec<usize> = qubits.iter().map(|q| q + n).collect();
        apply_matrix(&mut self.data, 2 * n, &cols, &m.conj());
    }

    /// `ρ ← Σ_m K_m ρ K_m†` on one qubit.
    pub(crate) fn apply_kraus(&mut self, qubit: usize, ops: &[Matrix2]) -> Result<()> {
        check_qubits(&[qubit], self.n_qubits)?;
        if let [only] = ops {
            self.conjugate_by(&[qubit], &GateMatrix::One(*only));
            return Ok(());
        }
        let mut acc = vec![ZERO; self.data.len()];
        for k in ops {
            let mut term = self.clone();
            term.conjugate_by(&[qubit], &GateMatrix::One(*k));
            for (a, t) in acc.iter_mut().zip(&term.data) {
                *a += t;
            }
        }
        self.data = acc;
        Ok(())
    }
}

/// Either a statevector or a density matrix.
#[derive(Debug, Clone, PartialEq)]
pub enum QuantumState {
    Pure(StateVector),
    Mixed(DensityMatrix),
}

impl QuantumState {
    pub fn zero(n_qubits: usize) -> Self {
        QuantumState::Pure(StateVector::zero(n_qubits))
    }

    pub fn n_qubits(&self) -> usize {
        match self {
            QuantumState::Pure(s) => s.n_qubits(),
            QuantumState::Mixed(r) => r.n_qubits(),
        }
    }

    pub fn dim(&self) -> usize {
        1 << self.n_qubits()
    }

    /// Promotes a pure state to `|ψ⟩⟨ψ|`; mixed states pass through.
    pub fn into_mixed(self) -> DensityMatrix {
        match self {
            QuantumState::Pure(s) => s.to_density(),
            QuantumState::Mixed(r) => r,
        }
    }

    /// Diagonal of the state in the computational basis.
    pub fn probabilities(&self) -> Vec<f64> {
        match self {
            QuantumState::Pure(s) => s.probabilities(),
            QuantumState::Mixed(r) => r.diagonal(),
        }
    }

    pub fn apply(&mut self, qubits: &[usize], m: &GateMatrix) -> Result<()> {
        match self {
            QuantumState::Pure(s) => s.apply(qubits, m),
            QuantumState::Mixed(r) => r.apply(qubits, m),
        }
    }
}

impl From<StateVector> for QuantumState {
    fn from(s: StateVector) -> Self {
        QuantumState::Pure(s)
    }
}

impl From<DensityMatrix> for QuantumState {
    fn from(r: DensityMatrix) -> Self {
        QuantumState::Mixed(r)
    }
}

/// `Σ_z hdiag[z]·P(z)` for a diagonal observable.
pub fn expectation_diag(state: &QuantumState, hdiag: &[f64]) -> Result<f64> {
    if hdiag.len() != state.dim() {
        return Err(Error::DimensionMismatch {
            expected: state.dim(),
            got: hdiag.len(),
        });
    }
    Ok(state.probabilities().iter().zip(hdiag).map(|(p, h)| p * h).sum())
}

/// Shot-sampled estimate of [`expectation_diag`].
pub fn sample_expectation_diag<R: Rng + ?Sized>(
    state: &QuantumState,
    hdiag: &[f64],
    shots: usize,
    rng: &mut R,
) -> Result<f64> {
    if hdiag.len() != state.dim() {
        return Err(Error::DimensionMismatch {
            expected: state.dim(),
            got: hdiag.len(),
        });
    }
    if shots == 0 {
        return Ok(0.0);
    }
    let mut cdf = Vec::with_capacity(hdiag.len());
    let mut acc = 0.0;
    for p in state.probabilities() {
        acc += p.max(0.0);
        cdf.push(acc);
    }
    let mut total = 0.0;
    for _ in 0..shots {
        let u: f64 = rng.random::<f64>() * acc;
        let z = cdf.partition_point(|&c| c <= u).min(hdiag.len() - 1);
        total += hdiag[z];
    }
    Ok(total / shots as f64)
}

/// Overlap of a pure reference with another state:
/// `|⟨ψ|φ⟩|²` or `⟨ψ|ρ|ψ⟩`.
pub fn fidelity(ideal: &QuantumState, actual: &QuantumState) -> Result<f64> {
    let QuantumState::Pure(psi) = ideal else {
        return Err(Error::MixedReference);
    };
    if ideal.dim() != actual.dim() {
        return Err(Error::DimensionMismatch {
            expected: ideal.dim(),
            got: actual.dim(),
        });
    }
    let f = match actual {
        QuantumState::Pure(phi) => psi.inner(phi)?.norm_sqr(),
        QuantumState::Mixed(rho) => {
            let dim = rho.dim();
            let a = psi.amplitudes();
            let mut acc = ZERO;
            for r in 0..dim {
                let row: C64 = rho.data[r * dim..(r + 1) * dim].iter().zip(a).map(|(x, y)| x * y).sum();
                acc += a[r].conj() * row;
            }
            acc.re
        }
    };
    Ok(f.clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::gates::{gate_matrix, GateKind};
    use std::f64::consts::FRAC_1_SQRT_2;

    fn gate(kind: GateKind) -> GateMatrix {
        gate_matrix(kind, &[]).unwrap()
    }

    #[test]
    fn hadamard_on_zero() {
        let mut s = StateVector::zero(1);
        s.apply(&[0], &gate(GateKind::H)).unwrap();
        for a in s.amplitudes() {
            assert!((a - C64::new(FRAC_1_SQRT_2, 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn cnot_truth_table_with_msb_ordering() {
        // |10⟩ is index 2
        let mut s = StateVector::basis(2, 2);
        s.apply(&[0, 1], &gate(GateKind::CNOT)).unwrap();
        assert_eq!(s, StateVector::basis(2, 3));
        let mut s = StateVector::basis(2, 1);
        s.apply(&[0, 1], &gate(GateKind::CNOT)).unwrap();
        assert_eq!(s, StateVector::basis(2, 1));
        // reversed control
        let mut s = StateVector::basis(2, 1);
        s.apply(&[1, 0], &gate(GateKind::CNOT)).unwrap();
        assert_eq!(s, StateVector::basis(2, 3));
    }

    #[test]
    fn hadamard_layer_is_uniform() {
        let mut s = StateVector::zero(3);
        for q in 0..3 {
            s.apply(&[q], &gate(GateKind::H)).unwrap();
        }
        let amp = 1.0 / 8f64.sqrt();
        for a in s.amplitudes() {
            assert!((a.re - amp).abs() < 1e-15 && a.im.abs() < 1e-15);
        }
    }

    #[test]
    fn idle_leaves_state_alone() {
        let mut s = StateVector::basis(2, 3);
        s.apply(&[1], &GateMatrix::Identity).unwrap();
        assert_eq!(s, StateVector::basis(2, 3));
    }

    #[test]
    fn out_of_range_and_repeated_qubits() {
        let mut s = StateVector::zero(2);
        assert_eq!(
            s.apply(&[2], &gate(GateKind::X)),
            Err(Error::QubitOutOfRange { qubit: 2, n_qubits: 2 })
        );
        assert_eq!(s.apply(&[1, 1], &gate(GateKind::CZ)), Err(Error::RepeatedQubit(1)));
    }

    #[test]
    fn density_gate_matches_pure_evolution() {
        let mut psi = StateVector::zero(2);
        psi.apply(&[0], &gate(GateKind::H)).unwrap();
        let mut rho = psi.to_density();
        let u = gate_matrix(GateKind::U3, &[0.4, 1.2, -0.3]).unwrap();
        psi.apply(&[1], &u).unwrap();
        psi.apply(&[0, 1], &gate(GateKind::CNOT)).unwrap();
        rho.apply(&[1], &u).unwrap();
        rho.apply(&[0, 1], &gate(GateKind::CNOT)).unwrap();
        let expect = psi.to_density();
        for (a, b) in rho.as_row_major().iter().zip(expect.as_row_major()) {
            assert!((a - b).norm() < 1e-14);
        }
    }

    #[test]
    fn expectation_examples() {
        let zero = QuantumState::zero(3);
        let h: Vec<f64> = (0..8).map(f64::from).collect();
        assert_eq!(expectation_diag(&zero, &[0.0; 8]).unwrap(), 0.0);
        assert_eq!(expectation_diag(&zero, &h).unwrap(), 0.0);
        let mut s = StateVector::zero(3);
        for q in 0..3 {
            s.apply(&[q], &gate(GateKind::H)).unwrap();
        }
        let e = expectation_diag(&s.clone().into(), &h).unwrap();
        assert!((e - 3.5).abs() < 1e-12);
        let e = expectation_diag(&QuantumState::Mixed(s.to_density()), &h).unwrap();
        assert!((e - 3.5).abs() < 1e-12);
        assert!(expectation_diag(&zero, &[0.0; 4]).is_err());
    }

    #[test]
    fn fidelity_examples() {
        let zero: QuantumState = StateVector::zero(1).into();
        let one: QuantumState = StateVector::basis(1, 1).into();
        assert!((fidelity(&zero, &zero).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(fidelity(&zero, &one).unwrap(), 0.0);
        let mixed = DensityMatrix::from_row_major(2, vec![C64::new(0.8, 0.0), ZERO, ZERO, C64::new(0.2, 0.0)]).unwrap();
        assert!((fidelity(&zero, &mixed.clone().into()).unwrap() - 0.8).abs() < 1e-15);
        assert_eq!(fidelity(&mixed.into(), &zero), Err(Error::MixedReference));
        assert!(fidelity(&zero, &QuantumState::zero(2)).is_err());
    }

    #[test]
    fn shot_sampling_converges() {
        use rand::SeedableRng;
        let mut s = StateVector::zero(2);
        s.apply(&[0], &gate(GateKind::H)).unwrap();
        let h = [0.0, 1.0, 2.0, 3.0];
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let est = sample_expectation_diag(&s.into(), &h, 20_000, &mut rng).unwrap();
        // exact value is (0 + 2)/2 = 1
        assert!((est - 1.0).abs() < 0.05, "{est}");
    }
}
