use proptest::prelude::*;
use proptest::test_runner::{Config, FileFailurePersistence};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sadqas::pools::{assemble_circuit, build_pool, BlockLayout, PoolFamily};
use sadqas::sim::{adjoint_gradient, energy, parameter_shift_gradient, CircuitIR, QuantumState, StateVector};

const N: usize = 5;

/// A placeholder circuit on 5 qubits from a random O1–O4 pool, plus angles
/// and a random diagonal observable.
fn random_instance(seed: u64) -> (CircuitIR, Vec<f64>, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let family = [PoolFamily::O1, PoolFamily::O2, PoolFamily::O3, PoolFamily::O4][rng.random_range(0..4)];
    let pool = build_pool(family, rng.random_range(1..N), N).unwrap();
    let layout = [BlockLayout::default(), BlockLayout::rx_pi(), BlockLayout::h_layer()][rng.random_range(0..3)]
        .with_blocks(rng.random_range(1..3));
    let p = rng.random_range(2..6);
    let k: Vec<usize> = (0..p).map(|_| rng.random_range(0..pool.len())).collect();
    let circuit = assemble_circuit(&k, &pool, &layout).unwrap().circuit;
    let params = (0..circuit.n_params).map(|_| rng.random_range(-4.0..4.0)).collect();
    let hdiag = (0..1 << N).map(|_| rng.random_range(-3.0..3.0)).collect();
    (circuit, params, hdiag)
}

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-4)
}

proptest! {
    #![proptest_config(Config { cases: 100, failure_persistence: Some(Box::new(FileFailurePersistence::Off)), ..Config::default() })]

    #[test]
    fn adjoint_agrees_with_shift_and_differences(seed in any::<u64>()) {
        let (c, params, h) = random_instance(seed);
        let init = StateVector::zero(N);
        let zero = QuantumState::zero(N);
        let (e, g) = adjoint_gradient(&c, &params, &init, &h).unwrap();
        prop_assert!((e - energy(&c, &params, &zero, &h).unwrap()).abs() < 1e-12);
        let ps = parameter_shift_gradient(&c, &params, &zero, &h).unwrap();
        for (a, b) in g.iter().zip(&ps) {
            prop_assert!((a - b).abs() <= 1e-8, "adjoint {a} vs shift {b}");
        }
        let eps = 1e-5;
        let mut p = params.clone();
        for i in 0..p.len() {
            p[i] = params[i] + eps;
            let up = energy(&c, &p, &zero, &h).unwrap();
            p[i] = params[i] - eps;
            let dn = energy(&c, &p, &zero, &h).unwrap();
            p[i] = params[i];
            let fd = (up - dn) / (2.0 * eps);
            prop_assert!(rel_err(g[i], fd) <= 1e-5, "slot {i}: adjoint {} vs fd {fd}", g[i]);
        }
    }
}

#[test]
fn parameter_free_circuits_have_empty_gradients() {
    let pool = build_pool(PoolFamily::O1, 4, N).unwrap();
    let e = pool.identity_index().unwrap();
    let c = assemble_circuit(&[e, e], &pool, &BlockLayout::h_layer())
        .unwrap()
        .circuit;
    let h: Vec<f64> = (0..1 << N).map(|i| i as f64).collect();
    let (energy, g) = adjoint_gradient(&c, &[], &StateVector::zero(N), &h).unwrap();
    assert!(g.is_empty());
    // uniform superposition: mean of the diagonal
    assert!((energy - 15.5).abs() < 1e-12);
}
