use rand::Rng;

use crate::encoder::{transform_alpha, Encoder, EncoderVariant};
use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Row `i` of `α′` pushed through a max-shifted softmax.
pub fn placeholder_probs(alpha_prime: &Matrix, i: usize) -> Vec<f64> {
    softmax(alpha_prime.row(i))
}

pub(crate) fn softmax(row: &[f64]) -> Vec<f64> {
    let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = row.iter().map(|v| (v - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

fn all_probs(alpha_prime: &Matrix) -> Vec<Vec<f64>> {
    (0..alpha_prime.rows())
        .map(|i| placeholder_probs(alpha_prime, i))
        .collect()
}

fn check_structure(alpha_prime: &Matrix, k: &[usize]) -> Result<()> {
    if k.len() != alpha_prime.rows() {
        return Err(Error::StructureLength {
            expected: alpha_prime.rows(),
            got: k.len(),
        });
    }
    for (i, &j) in k.iter().enumerate() {
        if j >= alpha_prime.cols() {
            return Err(Error::StructureIndex {
                placeholder: i,
                index: j,
                pool_size: alpha_prime.cols(),
            });
        }
    }
    Ok(())
}

/// `P(k, α′) = ∏ᵢ p(kᵢ, α′ᵢ)`
pub fn structure_prob(alpha_prime: &Matrix, k: &[usize]) -> Result<f64> {
    check_structure(alpha_prime, k)?;
    Ok(k.iter()
        .enumerate()
        .map(|(i, &j)| placeholder_probs(alpha_prime, i)[j])
        .product())
}

/// `K` independent structures, each placeholder drawn from its own row.
pub fn sample_batch<R: Rng + ?Sized>(alpha_prime: &Matrix, batch_size: usize, rng: &mut R) -> Vec<Vec<usize>> {
    let probs = all_probs(alpha_prime);
    (0..batch_size)
        .map(|_| probs.iter().map(|row| sample_index(row, rng)).collect())
        .collect()
}

fn sample_index<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (j, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return j;
        }
    }
    // Rounding left `acc` just under 1; fall back to the last possible op.
    probs.iter().rposition(|p| *p > 0.0).unwrap_or(0)
}

/// Self-normalized weights `P(k)/Σ P(k′)` over the batch.
pub fn batch_weights(batch: &[Vec<usize>], alpha_prime: &Matrix) -> Result<Vec<f64>> {
    let probs: Vec<f64> = batch
        .iter()
        .map(|k| structure_prob(alpha_prime, k))
        .collect::<Result<_>>()?;
    let total: f64 = probs.iter().sum();
    if !(total > 0.0 && total.is_finite()) {
        return Err(Error::DegenerateBatch);
    }
    Ok(probs.into_iter().map(|p| p / total).collect())
}

/// `𝓛 = Σ w_k L(k)` with self-normalized weights.
pub fn batch_loss(batch: &[Vec<usize>], losses: &[f64], alpha_prime: &Matrix) -> Result<f64> {
    check_losses(batch, losses)?;
    let w = batch_weights(batch, alpha_prime)?;
    Ok(w.iter().zip(losses).map(|(w, l)| w * l).sum())
}

fn check_losses(batch: &[Vec<usize>], losses: &[f64]) -> Result<()> {
    if batch.len() != losses.len() || batch.is_empty() {
        return Err(Error::DimensionMismatch {
            expected: batch.len(),
            got: losses.len(),
        });
    }
    Ok(())
}

/// Gradient of [`batch_loss`] with respect to `α′`, batch held fixed:
/// `Σ_k w_k (L(k) − 𝓛) Σᵢ (onehot(kᵢ) − softmax(α′ᵢ))` placed in row `i`.
pub fn grad_alpha(batch: &[Vec<usize>], losses: &[f64], alpha_prime: &Matrix) -> Result<Matrix> {
    check_losses(batch, losses)?;
    let w = batch_weights(batch, alpha_prime)?;
    let mean: f64 = w.iter().zip(losses).map(|(w, l)| w * l).sum();
    let probs = all_probs(alpha_prime);
    let mut grad = Matrix::zeros(alpha_prime.rows(), alpha_prime.cols());
    for ((k, wk), lk) in batch.iter().zip(&w).zip(losses) {
        let c = wk * (lk - mean);
        if c == 0.0 {
            continue;
        }
        for (i, &ki) in k.iter().enumerate() {
            let row = grad.row_mut(i);
            for (g, p) in row.iter_mut().zip(&probs[i]) {
                *g -= c * p;
            }
            row[ki] += c;
        }
    }
    Ok(grad)
}

/// `k*ᵢ = argmax_j α′ᵢⱼ`, lowest index on ties.
pub fn extract_structure(alpha_prime: &Matrix) -> Vec<usize> {
    (0..alpha_prime.rows())
        .map(|i| {
            let row = alpha_prime.row(i);
            let mut best = 0;
            for (j, v) in row.iter().enumerate() {
                if *v > row[best] {
                    best = j;
                }
            }
            best
        })
        .collect()
}

/// `α + β F(input)`, where the input is `ααᵀα` for F1 and `α` for F2.
/// Without an encoder, or with `β = 0`, this is `α` itself.
pub fn enriched_alpha(alpha: &Matrix, encoder: Option<&Encoder>, beta: f64) -> Result<Matrix> {
    match encoder {
        Some(enc) if beta != 0.0 => Ok(add_scaled(alpha, &enc.output(alpha)?, beta)),
        _ => Ok(alpha.clone()),
    }
}

pub(crate) fn add_scaled(alpha: &Matrix, f: &Matrix, beta: f64) -> Matrix {
    if beta == 0.0 {
        return alpha.clone();
    }
    alpha.add(&f.scale(beta))
}

/// The tokens an encoder of `variant` reads for `alpha`.
pub fn encoder_input(alpha: &Matrix, variant: EncoderVariant) -> Matrix {
    match variant {
        EncoderVariant::F1 => transform_alpha(alpha),
        EncoderVariant::F2 => alpha.clone(),
    }
}
