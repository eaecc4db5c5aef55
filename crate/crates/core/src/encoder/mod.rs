//! Transformer encoder `F` that reads the architecture matrix.
//!
//! Each of the `p` placeholder rows is one token. Tokens are embedded to
//! `d_encoder`, passed through post-norm self-attention layers and projected
//! back to `l` values, so `F(α)` has the shape of `α`. Training minimizes
//! the largest entrywise change of `F` relative to `m` steps earlier.

mod checkpoint;
mod config;
mod network;

use std::collections::VecDeque;

use rand::Rng;

pub use checkpoint::{read_checkpoint, write_checkpoint};
pub use config::{EncoderConfig, EncoderOptimizer, EncoderVariant};
pub use network::{AdamMoments, EncoderWeights, ForwardCache, Gradients, LayerWeights};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// `α αᵀ α`
pub fn transform_alpha(alpha: &Matrix) -> Matrix {
    alpha.matmul_t(alpha).matmul(alpha)
}

/// Sinusoidal position codes, `p × d`.
pub fn positional_encoding(p: usize, d: usize) -> Result<Matrix> {
    if !d.is_multiple_of(2) {
        return Err(Error::EncoderConfig(format!("positional encoding width {d} is odd")));
    }
    let mut pe = Matrix::zeros(p, d);
    for pos in 0..p {
        for i in 0..d / 2 {
            let angle = pos as f64 / 10000f64.powf(2.0 * i as f64 / d as f64);
            pe[(pos, 2 * i)] = angle.sin();
            pe[(pos, 2 * i + 1)] = angle.cos();
        }
    }
    Ok(pe)
}

/// Largest entrywise distance `max |F_prev − F_t|`.
pub fn encoder_loss(f_t: &Matrix, f_prev: &Matrix) -> Result<f64> {
    Ok(encoder_loss_grad(f_t, f_prev)?.0)
}

/// Loss and its gradient with respect to `f_t`.
///
/// The gradient is `sign(f_t − f_prev)` at the first maximizing entry in
/// row-major order and zero elsewhere.
pub fn encoder_loss_grad(f_t: &Matrix, f_prev: &Matrix) -> Result<(f64, Matrix)> {
    if f_t.shape() != f_prev.shape() {
        return Err(Error::Shape {
            expected: f_t.shape(),
            got: f_prev.shape(),
        });
    }
    let mut best = 0;
    let mut loss = f64::NEG_INFINITY;
    for (i, (a, b)) in f_t.as_slice().iter().zip(f_prev.as_slice()).enumerate() {
        let d = (a - b).abs();
        if d > loss {
            loss = d;
            best = i;
        }
    }
    let mut grad = Matrix::zeros(f_t.rows(), f_t.cols());
    if f_t.as_slice().is_empty() {
        return Ok((0.0, grad));
    }
    let diff = f_t.as_slice()[best] - f_prev.as_slice()[best];
    grad.as_mut_slice()[best] = if diff > 0.0 {
        1.0
    } else if diff < 0.0 {
        -1.0
    } else {
        0.0
    };
    Ok((loss, grad))
}

/// Output of one encoder step.
#[derive(Debug, Clone, PartialEq)]
pub struct EncoderOutput {
    /// `F_t`, computed before the weight update.
    pub output: Matrix,
    pub loss: f64,
}

/// A forward pass whose weight update has not been applied yet.
#[derive(Debug, Clone)]
pub struct PendingStep {
    pub output: Matrix,
    pub loss: f64,
    cache: ForwardCache,
    d_output: Matrix,
}

/// Encoder weights together with the lagged outputs the loss needs.
#[derive(Debug, Clone)]
pub struct Encoder {
    config: EncoderConfig,
    weights: EncoderWeights,
    history: VecDeque<Matrix>,
    steps: u64,
}

impl Encoder {
    pub fn new<R: Rng + ?Sized>(config: EncoderConfig, n_ops: usize, rng: &mut R) -> Result<Self> {
        let weights = EncoderWeights::init(&config, n_ops, rng)?;
        Ok(Self::from_weights(config, weights))
    }

    pub fn from_weights(config: EncoderConfig, weights: EncoderWeights) -> Self {
        Self {
            config,
            weights,
            history: VecDeque::new(),
            steps: 0,
        }
    }

    pub fn config(&self) -> &EncoderConfig {
        &self.config
    }

    pub fn weights(&self) -> &EncoderWeights {
        &self.weights
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    /// `F(α)` with the current weights.
    pub fn output(&self, alpha: &Matrix) -> Result<Matrix> {
        Ok(self.weights.forward(&self.config, alpha)?.0)
    }

    /// `F_{t−m}`, or zeros while fewer than `m` steps have run.
    pub fn lagged(&self, rows: usize) -> Matrix {
        match self.history.front() {
            Some(f) if self.history.len() == self.config.lag => f.clone(),
            _ => Matrix::zeros(rows, self.weights.n_ops),
        }
    }

    /// Forward pass and loss for this step, without updating weights.
    pub fn begin_step(&self, alpha: &Matrix) -> Result<PendingStep> {
        let (output, cache) = self.weights.forward(&self.config, alpha)?;
        let (loss, d_output) = encoder_loss_grad(&output, &self.lagged(alpha.rows()))?;
        Ok(PendingStep {
            output,
            loss,
            cache,
            d_output,
        })
    }

    /// Applies the update for `pending`. `extra` is an additional gradient
    /// with respect to the output, summed with the encoder-loss gradient.
    pub fn finish_step(&mut self, pending: PendingStep, extra: Option<&Matrix>) -> Result<()> {
        let mut d_output = pending.d_output;
        if let Some(e) = extra {
            if e.shape() != d_output.shape() {
                return Err(Error::Shape {
                    expected: d_output.shape(),
                    got: e.shape(),
                });
            }
            d_output.add_assign(e);
        }
        let grads = self.weights.backward(&pending.cache, &d_output)?;
        self.apply(&grads)?;
        self.history.push_back(pending.output);
        if self.history.len() > self.config.lag {
            self.history.pop_front();
        }
        self.steps += 1;
        Ok(())
    }

    /// Forward, loss against the lagged output, backward and update.
    pub fn step(&mut self, alpha: &Matrix) -> Result<EncoderOutput> {
        let pending = self.begin_step(alpha)?;
        let out = EncoderOutput {
            output: pending.output.clone(),
            loss: pending.loss,
        };
        self.finish_step(pending, None)?;
        Ok(out)
    }

    /// One optimizer update with learning rate `eta`.
    pub fn apply(&mut self, grads: &Gradients) -> Result<()> {
        let eta = self.config.eta;
        match self.config.optimizer {
            EncoderOptimizer::GradientDescent => {
                for (w, g) in self.weights.tensors_mut().into_iter().zip(&grads.tensors) {
                    for (a, b) in w.as_mut_slice().iter_mut().zip(g.as_slice()) {
                        *a -= eta * b;
                    }
                }
            }
            EncoderOptimizer::Adam => {
                const B1: f64 = 0.9;
                const B2: f64 = 0.999;
                const EPS: f64 = 1e-8;
                let mut adam = match self.weights.adam.take() {
                    Some(a) => a,
                    None => {
                        let zeros: Vec<Matrix> = grads
                            .tensors
                            .iter()
                            .map(|g| Matrix::zeros(g.rows(), g.cols()))
                            .collect();
                        AdamMoments {
                            step: 0,
                            m: zeros.clone(),
                            v: zeros,
                        }
                    }
                };
                adam.step += 1;
                let c1 = 1.0 - B1.powi(adam.step as i32);
                let c2 = 1.0 - B2.powi(adam.step as i32);
                let tensors = self.weights.tensors_mut();
                for (((w, g), m), v) in tensors
                    .into_iter()
                    .zip(&grads.tensors)
                    .zip(&mut adam.m)
                    .zip(&mut adam.v)
                {
                    let it = w
                        .as_mut_slice()
                        .iter_mut()
                        .zip(g.as_slice())
                        .zip(m.as_mut_slice().iter_mut().zip(v.as_mut_slice()));
                    for ((wi, gi), (mi, vi)) in it {
                        *mi = B1 * *mi + (1.0 - B1) * gi;
                        *vi = B2 * *vi + (1.0 - B2) * gi * gi;
                        *wi -= eta * (*mi / c1) / ((*vi / c2).sqrt() + EPS);
                    }
                }
                self.weights.adam = Some(adam);
            }
        }
        if self.weights.is_finite() {
            Ok(())
        } else {
            Err(Error::NonFinite("encoder weights"))
        }
    }
}

/// Largest analytic vs central-difference disagreement found by [`gradient_check`].
#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub max_rel_err: f64,
    pub worst_tensor: String,
    pub entries_checked: usize,
    /// Entries skipped because the ± probes straddle a ReLU kink.
    pub kinks_skipped: usize,
}

/// Compares [`EncoderWeights::backward`] against central differences of
/// `Σ d_output ⊙ F(α)` for every weight entry.
///
/// The relative error is `|a − n| / max(|a|, |n|, floor)`; the floor keeps
/// entries whose true gradient is essentially zero from dominating. A
/// central difference across a ReLU kink measures an average of two
/// slopes, so entries whose probes flip any ReLU are counted, not checked.
pub fn gradient_check(
    cfg: &EncoderConfig,
    weights: &EncoderWeights,
    alpha: &Matrix,
    d_output: &Matrix,
    eps: f64,
    floor: f64,
) -> Result<GradCheckReport> {
    let (_, cache) = weights.forward(cfg, alpha)?;
    let grads = weights.backward(&cache, d_output)?;
    let objective = |w: &EncoderWeights| -> Result<(f64, Vec<bool>)> {
        let (y, cache) = w.forward(cfg, alpha)?;
        let value = y.as_slice().iter().zip(d_output.as_slice()).map(|(a, b)| a * b).sum();
        Ok((value, cache.relu_pattern()))
    };
    let mut report = GradCheckReport {
        max_rel_err: 0.0,
        worst_tensor: String::new(),
        entries_checked: 0,
        kinks_skipped: 0,
    };
    let mut probe = weights.clone();
    for (t, name) in weights.tensor_names().iter().enumerate() {
        for i in 0..weights.tensors()[t].as_slice().len() {
            let orig = weights.tensors()[t].as_slice()[i];
            probe.tensors_mut()[t].as_mut_slice()[i] = orig + eps;
            let (up, up_relu) = objective(&probe)?;
            probe.tensors_mut()[t].as_mut_slice()[i] = orig - eps;
            let (down, down_relu) = objective(&probe)?;
            probe.tensors_mut()[t].as_mut_slice()[i] = orig;
            if up_relu != down_relu {
                report.kinks_skipped += 1;
                continue;
            }
            let numeric = (up - down) / (2.0 * eps);
            let analytic = grads.tensors[t].as_slice()[i];
            let err = (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(floor);
            if err > report.max_rel_err {
                report.max_rel_err = err;
                report.worst_tensor = name.clone();
            }
            report.entries_checked += 1;
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests;
