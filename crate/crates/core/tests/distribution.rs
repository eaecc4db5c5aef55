use proptest::prelude::*;
use proptest::test_runner::{Config, FileFailurePersistence};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sadqas::search::{
    batch_loss, batch_weights, extract_structure, grad_alpha, placeholder_probs, sample_batch, structure_prob,
};
use sadqas::Matrix;

fn config(cases: u32) -> Config {
    Config {
        cases,
        failure_persistence: Some(Box::new(FileFailurePersistence::Off)),
        ..Config::default()
    }
}

/// (p, l, row-major entries)
fn alpha_strategy(max_p: usize, max_l: usize, scale: f64) -> impl Strategy<Value = Matrix> {
    (1..=max_p, 2..=max_l).prop_flat_map(move |(p, l)| {
        prop::collection::vec(-scale..scale, p * l).prop_map(move |data| Matrix::from_vec(p, l, data).unwrap())
    })
}

fn naive_softmax(row: &[f64]) -> Vec<f64> {
    let exps: Vec<f64> = row.iter().map(|v| v.exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.iter().map(|e| e / sum).collect()
}

proptest! {
    #![proptest_config(config(200))]

    #[test]
    fn batch_weights_sum_to_one(alpha in alpha_strategy(6, 12, 6.0), k in 1usize..32, seed in any::<u64>()) {
        let batch = sample_batch(&alpha, k, &mut ChaCha8Rng::seed_from_u64(seed));
        let w = batch_weights(&batch, &alpha).unwrap();
        prop_assert!((w.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        prop_assert!(w.iter().all(|w| *w > 0.0));
    }

    #[test]
    fn stable_softmax_matches_naive(alpha in alpha_strategy(3, 16, 30.0)) {
        for i in 0..alpha.rows() {
            let stable = placeholder_probs(&alpha, i);
            let naive = naive_softmax(alpha.row(i));
            for (a, b) in stable.iter().zip(&naive) {
                prop_assert!((a - b).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn softmax_stays_finite_at_extreme_logits(row in prop::collection::vec(-1e4f64..1e4, 2..20)) {
        let a = Matrix::from_vec(1, row.len(), row).unwrap();
        let p = placeholder_probs(&a, 0);
        prop_assert!(p.iter().all(|v| v.is_finite() && *v >= 0.0));
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn extraction_ignores_row_shifts(alpha in alpha_strategy(6, 12, 5.0), shifts in prop::collection::vec(-100.0f64..100.0, 6)) {
        let mut shifted = alpha.clone();
        for (i, s) in shifts.iter().enumerate().take(alpha.rows()) {
            for v in shifted.row_mut(i) {
                *v += s;
            }
        }
        prop_assert_eq!(extract_structure(&alpha), extract_structure(&shifted));
    }

    #[test]
    fn grad_alpha_matches_finite_differences(
        alpha in alpha_strategy(6, 6, 2.0),
        k in 1usize..=8,
        seed in any::<u64>(),
        raw_losses in prop::collection::vec(0.0f64..1.0, 8),
    ) {
        let batch = sample_batch(&alpha, k, &mut ChaCha8Rng::seed_from_u64(seed));
        let losses = &raw_losses[..k];
        let g = grad_alpha(&batch, losses, &alpha).unwrap();
        let eps = 1e-5;
        let mut probe = alpha.clone();
        for idx in 0..alpha.as_slice().len() {
            let base = alpha.as_slice()[idx];
            probe.as_mut_slice()[idx] = base + eps;
            let up = batch_loss(&batch, losses, &probe).unwrap();
            probe.as_mut_slice()[idx] = base - eps;
            let dn = batch_loss(&batch, losses, &probe).unwrap();
            probe.as_mut_slice()[idx] = base;
            let fd = (up - dn) / (2.0 * eps);
            let a = g.as_slice()[idx];
            let rel = (a - fd).abs() / a.abs().max(fd.abs()).max(1e-4);
            prop_assert!(rel <= 1e-6, "entry {idx}: {a} vs {fd}");
        }
    }
}

#[test]
fn structure_probabilities_sum_to_one_exhaustively() {
    let (p, l) = (3, 4);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..20 {
        let alpha = Matrix::uniform(p, l, 3.0, &mut rng);
        let mut total = 0.0;
        for code in 0..l.pow(p as u32) {
            let k: Vec<usize> = (0..p).map(|i| code / l.pow(i as u32) % l).collect();
            total += structure_prob(&alpha, &k).unwrap();
        }
        assert!((total - 1.0).abs() <= 1e-9, "{total}");
    }
}

#[test]
fn structure_probabilities_sum_to_one_at_the_size_limit() {
    // p·log2(l) = 16
    let (p, l) = (4, 16);
    let alpha = Matrix::uniform(p, l, 4.0, &mut ChaCha8Rng::seed_from_u64(3));
    let mut total = 0.0;
    for code in 0..l.pow(p as u32) {
        let k: Vec<usize> = (0..p).map(|i| code / l.pow(i as u32) % l).collect();
        total += structure_prob(&alpha, &k).unwrap();
    }
    assert!((total - 1.0).abs() <= 1e-9, "{total}");
}

#[test]
fn lower_loss_structures_gain_logit() {
    let alpha = Matrix::zeros(2, 3);
    let batch = vec![vec![0, 1], vec![2, 1], vec![1, 0]];
    let g = grad_alpha(&batch, &[0.1, 0.9, 0.5], &alpha).unwrap();
    // descending the gradient must favour op 0 in row 0 over op 2
    assert!(g[(0, 0)] < g[(0, 2)]);
}
