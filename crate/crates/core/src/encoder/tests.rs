use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::*;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn small(variant: EncoderVariant) -> EncoderConfig {
    EncoderConfig {
        d_encoder: 8,
        heads: 2,
        layers: 2,
        d_ff: 12,
        variant,
        ..EncoderConfig::default()
    }
}

#[test]
fn transform_hand_example() {
    let a = Matrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]);
    assert_eq!(
        transform_alpha(&a),
        Matrix::from_rows(&[vec![38.0, 54.0], vec![86.0, 122.0]])
    );
    let i = Matrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]);
    assert_eq!(transform_alpha(&i), i);
    assert_eq!(transform_alpha(&Matrix::zeros(3, 5)), Matrix::zeros(3, 5));
}

#[test]
fn transform_matches_triple_loop() {
    let mut r = rng(11);
    for (p, l) in [(1, 1), (3, 4), (5, 2), (4, 7)] {
        let a = Matrix::uniform(p, l, 2.0, &mut r);
        let mut aat = vec![vec![0.0; p]; p];
        for i in 0..p {
            for j in 0..p {
                for k in 0..l {
                    aat[i][j] += a[(i, k)] * a[(j, k)];
                }
            }
        }
        let t = transform_alpha(&a);
        for i in 0..p {
            for j in 0..l {
                let want: f64 = (0..p).map(|k| aat[i][k] * a[(k, j)]).sum();
                assert!((t[(i, j)] - want).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn positional_encoding_values() {
    let pe = positional_encoding(5, 6).unwrap();
    assert_eq!(pe.row(0), &[0.0, 1.0, 0.0, 1.0, 0.0, 1.0]);
    assert!((pe[(1, 0)] - 0.8414709848078965).abs() < 1e-15);
    assert!(pe.as_slice().iter().all(|v| (-1.0..=1.0).contains(v)));
    assert!(positional_encoding(2, 3).is_err());
}

#[test]
fn loss_examples() {
    let z = Matrix::zeros(2, 2);
    assert_eq!(encoder_loss(&z, &z).unwrap(), 0.0);
    let mut f = Matrix::zeros(2, 2);
    f[(1, 0)] = 0.3;
    assert_eq!(encoder_loss(&f, &z).unwrap(), 0.3);
    let prev = Matrix::from_rows(&[vec![1.0, 2.0]]);
    let cur = Matrix::from_rows(&[vec![0.0, 5.0]]);
    assert_eq!(encoder_loss(&cur, &prev).unwrap(), 3.0);
    assert!(encoder_loss(&cur, &z).is_err());
}

#[test]
fn loss_gradient_ties_pick_first_entry() {
    let prev = Matrix::zeros(2, 2);
    let cur = Matrix::from_rows(&[vec![0.1, -0.5], vec![0.5, 0.2]]);
    let (loss, g) = encoder_loss_grad(&cur, &prev).unwrap();
    assert_eq!(loss, 0.5);
    assert_eq!(g.as_slice(), &[0.0, -1.0, 0.0, 0.0]);
}

#[test]
fn gradients_match_finite_differences() {
    let mut r = rng(2024);
    for (variant, p, l, d, heads) in [
        (EncoderVariant::F1, 3, 4, 8, 2),
        (EncoderVariant::F2, 4, 3, 8, 2),
        (EncoderVariant::F2, 6, 6, 16, 2),
        (EncoderVariant::F1, 2, 5, 6, 3),
    ] {
        let cfg = EncoderConfig {
            d_encoder: d,
            heads,
            d_ff: 2 * d,
            variant,
            ..EncoderConfig::default()
        };
        let w = EncoderWeights::init(&cfg, l, &mut r).unwrap();
        // Sizable logits so the F1 tokens are not all near zero.
        let alpha = Matrix::uniform(p, l, 1.0, &mut r);
        let d_out = Matrix::uniform(p, l, 1.0, &mut r);
        let rep = gradient_check(&cfg, &w, &alpha, &d_out, 1e-4, 1e-6).unwrap();
        assert!(rep.max_rel_err <= 1e-4, "{variant} p={p} l={l}: {rep:?}");
        assert_eq!(rep.entries_checked + rep.kinks_skipped, w.n_parameters());
        assert!(rep.kinks_skipped * 100 < w.n_parameters());
    }
}

#[test]
fn attention_rows_and_layer_norm_moments() {
    let cfg = EncoderConfig::default();
    let mut r = rng(5);
    let w = EncoderWeights::init(&cfg, 6, &mut r).unwrap();
    let alpha = Matrix::uniform(4, 6, 3.0, &mut r);
    let (_, cache) = w.forward(&cfg, &alpha).unwrap();
    for layer in 0..cfg.layers {
        for a in cache.attention(layer) {
            for i in 0..a.rows() {
                assert!((a.row(i).iter().sum::<f64>() - 1.0).abs() <= 1e-12);
            }
        }
        for xhat in cache.normalized(layer) {
            for i in 0..xhat.rows() {
                let row = xhat.row(i);
                let n = row.len() as f64;
                let mean = row.iter().sum::<f64>() / n;
                let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
                assert!(mean.abs() <= 1e-10);
                assert!((var - 1.0).abs() <= 1e-8);
            }
        }
    }
}

#[test]
fn forward_is_deterministic() {
    let cfg = EncoderConfig::default();
    let w = EncoderWeights::init(&cfg, 5, &mut rng(8)).unwrap();
    let w2 = EncoderWeights::init(&cfg, 5, &mut rng(8)).unwrap();
    assert_eq!(w, w2);
    let alpha = Matrix::uniform(3, 5, 1.0, &mut rng(9));
    let a = w.forward(&cfg, &alpha).unwrap().0;
    let b = w2.forward(&cfg, &alpha).unwrap().0;
    let bits = |m: &Matrix| m.as_slice().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
    assert_eq!(bits(&a), bits(&b));
}

#[test]
fn zero_head_gives_zero_output_and_stays_there() {
    let cfg = EncoderConfig {
        zero_output_head: true,
        ..EncoderConfig::default()
    };
    let mut enc = Encoder::new(cfg, 4, &mut rng(1)).unwrap();
    let mut r = rng(2);
    for _ in 0..5 {
        let alpha = Matrix::uniform(3, 4, 2.0, &mut r);
        let out = enc.step(&alpha).unwrap();
        assert_eq!(out.output, Matrix::zeros(3, 4));
        assert_eq!(out.loss, 0.0);
    }
}

#[test]
fn first_step_compares_against_zero() {
    let mut enc = Encoder::new(small(EncoderVariant::F2), 4, &mut rng(3)).unwrap();
    let alpha = Matrix::uniform(3, 4, 1.0, &mut rng(4));
    let f0 = enc.output(&alpha).unwrap();
    let out = enc.step(&alpha).unwrap();
    assert_eq!(out.output, f0);
    assert_eq!(out.loss, f0.max_abs());
    assert_eq!(enc.lagged(3), f0);
}

#[test]
fn zero_learning_rate_freezes_output() {
    let cfg = EncoderConfig {
        eta: 0.0,
        ..small(EncoderVariant::F1)
    };
    let mut enc = Encoder::new(cfg, 4, &mut rng(3)).unwrap();
    let before = enc.weights().clone();
    let alpha = Matrix::uniform(3, 4, 1.0, &mut rng(4));
    let first = enc.step(&alpha).unwrap();
    for _ in 0..3 {
        let out = enc.step(&alpha).unwrap();
        assert_eq!(out.output, first.output);
        assert_eq!(out.loss, 0.0);
    }
    assert_eq!(enc.weights().tensors(), before.tensors());
}

#[test]
fn lag_reaches_back_m_steps() {
    let cfg = EncoderConfig {
        lag: 2,
        ..small(EncoderVariant::F2)
    };
    let mut enc = Encoder::new(cfg, 3, &mut rng(6)).unwrap();
    let mut r = rng(7);
    let mut outs: Vec<Matrix> = Vec::new();
    for t in 0..5 {
        let alpha = Matrix::uniform(2, 3, 1.0, &mut r);
        let expect_prev = if t < 2 {
            Matrix::zeros(2, 3)
        } else {
            outs[t - 2].clone()
        };
        assert_eq!(enc.lagged(2), expect_prev);
        let out = enc.step(&alpha).unwrap();
        assert_eq!(out.loss, encoder_loss(&out.output, &expect_prev).unwrap());
        outs.push(out.output);
    }
}

#[test]
fn loss_drops_on_frozen_alpha() {
    let mut drops = 0;
    for seed in 0..10 {
        let mut enc = Encoder::new(EncoderConfig::default(), 5, &mut rng(100 + seed)).unwrap();
        let alpha = Matrix::uniform(4, 5, 1.0, &mut rng(200 + seed));
        let l0 = enc.step(&alpha).unwrap().loss;
        let l1 = enc.step(&alpha).unwrap().loss;
        if l1 <= l0 {
            drops += 1;
        }
    }
    assert!(drops >= 9, "{drops}/10");
}

#[test]
fn weights_stay_finite_with_adam() {
    let cfg = EncoderConfig {
        optimizer: EncoderOptimizer::Adam,
        eta: 1e-2,
        ..EncoderConfig::default()
    };
    let mut enc = Encoder::new(cfg, 4, &mut rng(12)).unwrap();
    let mut r = rng(13);
    for _ in 0..50 {
        let alpha = Matrix::uniform(3, 4, 5.0, &mut r);
        enc.step(&alpha).unwrap();
    }
    assert!(enc.weights().is_finite());
    assert_eq!(enc.weights().adam.as_ref().unwrap().step, 50);
}

#[test]
fn joint_gradient_is_added() {
    let cfg = small(EncoderVariant::F2);
    let mut a = Encoder::new(cfg.clone(), 3, &mut rng(21)).unwrap();
    let mut b = a.clone();
    let alpha = Matrix::uniform(2, 3, 1.0, &mut rng(22));
    let extra = Matrix::uniform(2, 3, 1.0, &mut rng(23));
    let pa = a.begin_step(&alpha).unwrap();
    a.finish_step(pa, Some(&extra)).unwrap();
    b.step(&alpha).unwrap();
    assert_ne!(a.weights().tensors(), b.weights().tensors());
    let zero = Matrix::zeros(2, 3);
    let mut c = Encoder::new(cfg, 3, &mut rng(21)).unwrap();
    let pc = c.begin_step(&alpha).unwrap();
    c.finish_step(pc, Some(&zero)).unwrap();
    assert_eq!(c.weights().tensors(), b.weights().tensors());
}

#[test]
fn checkpoint_round_trip() {
    for optimizer in [EncoderOptimizer::GradientDescent, EncoderOptimizer::Adam] {
        let cfg = EncoderConfig {
            optimizer,
            ..small(EncoderVariant::F1)
        };
        let mut enc = Encoder::new(cfg.clone(), 4, &mut rng(31)).unwrap();
        enc.step(&Matrix::uniform(3, 4, 1.0, &mut rng(32))).unwrap();
        let (manifest, blob) = write_checkpoint(enc.weights());
        assert!(manifest.starts_with("encoder-checkpoint 1\n"));
        let template = EncoderWeights::init(&cfg, 4, &mut rng(0)).unwrap();
        let back = read_checkpoint(&template, &manifest, &blob).unwrap();
        assert_eq!(back.tensors(), enc.weights().tensors());
        assert_eq!(back.adam, enc.weights().adam);
        assert!(read_checkpoint(&template, &manifest, &blob[..blob.len() - 8]).is_err());
        let other = EncoderWeights::init(&cfg, 5, &mut rng(0)).unwrap();
        assert!(read_checkpoint(&other, &manifest, &blob).is_err());
    }
}
