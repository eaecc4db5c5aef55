use std::fmt::Write as _;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::distribution::{add_scaled, batch_weights, extract_structure, grad_alpha, sample_batch};
use super::optim::{Optimizer, Stepper};
use super::task::{ParameterPool, Task};
use crate::encoder::{Encoder, EncoderConfig, EncoderVariant};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::pools::SlotSpan;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SearchVariant {
    Dqas,
    SaF1,
    SaF2,
}

impl SearchVariant {
    pub fn encoder_variant(self) -> Option<EncoderVariant> {
        match self {
            SearchVariant::Dqas => None,
            SearchVariant::SaF1 => Some(EncoderVariant::F1),
            SearchVariant::SaF2 => Some(EncoderVariant::F2),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SearchVariant::Dqas => "DQAS",
            SearchVariant::SaF1 => "SA-DQAS-F1",
            SearchVariant::SaF2 => "SA-DQAS-F2",
        }
    }
}

impl std::fmt::Display for SearchVariant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SearchVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "dqas" => Ok(SearchVariant::Dqas),
            "sa-dqas-f1" | "sa-f1" | "f1" => Ok(SearchVariant::SaF1),
            "sa-dqas-f2" | "sa-f2" | "f2" => Ok(SearchVariant::SaF2),
            _ => Err(Error::SearchConfig(format!("unknown variant {s:?}"))),
        }
    }
}

/// How sampled circuits update the shared θ.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ThetaUpdate {
    /// One step per sampled structure on its own loss; shared slots add up.
    #[default]
    PerSample,
    /// One step on the weighted batch loss.
    Weighted,
}

impl FromStr for ThetaUpdate {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "per-sample" => Ok(ThetaUpdate::PerSample),
            "weighted" => Ok(ThetaUpdate::Weighted),
            _ => Err(Error::SearchConfig(format!("unknown theta update {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchConfig {
    pub variant: SearchVariant,
    pub beta: f64,
    pub batch_size: usize,
    pub steps: usize,
    pub placeholders: usize,
    pub lr_alpha: f64,
    pub lr_theta: f64,
    pub alpha_optimizer: Optimizer,
    /// Initial circuit angles are uniform in `[−w, w)`.
    pub theta_init_half_width: f64,
    pub seed: u64,
    pub asp_epsilon: f64,
    pub theta_update: ThetaUpdate,
    /// Also train the encoder on the search loss through `α′`.
    pub joint_encoder: bool,
    pub encoder: EncoderConfig,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            variant: SearchVariant::SaF1,
            beta: 0.1,
            batch_size: 16,
            steps: 200,
            placeholders: 4,
            lr_alpha: 0.15,
            lr_theta: 0.05,
            alpha_optimizer: Optimizer::GradientDescent,
            theta_init_half_width: std::f64::consts::PI,
            seed: 0,
            asp_epsilon: 0.01,
            theta_update: ThetaUpdate::PerSample,
            joint_encoder: false,
            encoder: EncoderConfig::default(),
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::SearchConfig(m.into()));
        if self.batch_size == 0 {
            return bad("batch_size must be at least 1");
        }
        if self.placeholders == 0 {
            return bad("placeholders must be at least 1");
        }
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return bad("beta must be finite and non-negative");
        }
        for (name, v) in [
            ("lr_alpha", self.lr_alpha),
            ("lr_theta", self.lr_theta),
            ("theta_init_half_width", self.theta_init_half_width),
            ("asp_epsilon", self.asp_epsilon),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::SearchConfig(format!("{name} must be finite and non-negative")));
            }
        }
        if self.variant != SearchVariant::Dqas {
            self.encoder.validate()?;
        }
        Ok(())
    }
}

/// RNG streams derived from the run seed. Each purpose owns one ChaCha8
/// stream so that skipping a consumer (the encoder, in DQAS) leaves the
/// others untouched.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum RngStream {
    Theta = 0,
    Encoder = 1,
    Sampling = 2,
    FineTune = 3,
}

pub fn rng_for(seed: u64, stream: RngStream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream as u64);
    rng
}

/// One row of the training log.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub step: usize,
    pub batch_loss: f64,
    /// Loss of the argmax structure of this step's `α′` after the θ update.
    pub argmax_energy: f64,
    /// FNV-1a over the bits of `α` after the update.
    pub alpha_hash: u64,
    pub encoder_loss: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainLog {
    pub records: Vec<StepRecord>,
    pub final_structure: Option<Vec<usize>>,
}

impl TrainLog {
    pub const CSV_HEADER: &'static str = "step,batch_loss,argmax_energy,encoder_loss";

    pub fn to_csv(&self) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for r in &self.records {
            let enc = r.encoder_loss.map(|v| v.to_string()).unwrap_or_default();
            let _ = writeln!(out, "{},{},{},{}", r.step, r.batch_loss, r.argmax_energy, enc);
        }
        out
    }

    pub fn argmax_history(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.argmax_energy).collect()
    }
}

pub fn fnv1a(values: &[f64]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for v in values {
        for b in v.to_bits().to_le_bytes() {
            h ^= u64::from(b);
            h = h.wrapping_mul(0x0100_0000_01b3);
        }
    }
    h
}

/// State of one search run.
#[derive(Debug, Clone)]
pub struct Search<'a> {
    cfg: SearchConfig,
    task: &'a Task,
    alpha: Matrix,
    theta: ParameterPool,
    alpha_stepper: Stepper,
    encoder: Option<Encoder>,
    sampler: ChaCha8Rng,
    log: TrainLog,
}

impl<'a> Search<'a> {
    /// `α` starts at zero; θ and the encoder are drawn from their streams.
    pub fn new(cfg: SearchConfig, task: &'a Task) -> Result<Self> {
        cfg.validate()?;
        let l = task.pool.len();
        let half_width = cfg.theta_init_half_width;
        let theta = ParameterPool::random(
            &task.pool,
            cfg.placeholders,
            task.layout.blocks,
            half_width,
            &mut rng_for(cfg.seed, RngStream::Theta),
        );
        let encoder = match cfg.variant.encoder_variant() {
            None => None,
            Some(variant) => {
                let enc_cfg = EncoderConfig {
                    variant,
                    ..cfg.encoder.clone()
                };
                Some(Encoder::new(enc_cfg, l, &mut rng_for(cfg.seed, RngStream::Encoder))?)
            }
        };
        Ok(Self {
            alpha: Matrix::zeros(cfg.placeholders, l),
            sampler: rng_for(cfg.seed, RngStream::Sampling),
            alpha_stepper: Stepper::new(cfg.alpha_optimizer, cfg.lr_alpha, cfg.placeholders * l),
            cfg,
            task,
            theta,
            encoder,
            log: TrainLog::default(),
        })
    }

    pub fn config(&self) -> &SearchConfig {
        &self.cfg
    }

    pub fn task(&self) -> &Task {
        self.task
    }

    pub fn alpha(&self) -> &Matrix {
        &self.alpha
    }

    pub fn theta(&self) -> &ParameterPool {
        &self.theta
    }

    pub fn encoder(&self) -> Option<&Encoder> {
        self.encoder.as_ref()
    }

    pub fn log(&self) -> &TrainLog {
        &self.log
    }

    /// `α′` from the current `α` and encoder weights, without training.
    pub fn enriched_alpha(&self) -> Result<Matrix> {
        super::distribution::enriched_alpha(&self.alpha, self.encoder.as_ref(), self.cfg.beta)
    }

    /// One training step: encoder, enrichment, sampling, θ update, α update, log.
    pub fn step(&mut self) -> Result<&StepRecord> {
        let beta = self.cfg.beta;
        let joint = self.cfg.joint_encoder;
        let mut deferred = None;
        let (alpha_prime, encoder_loss) = match self.encoder.as_mut() {
            Some(enc) => {
                let pending = enc.begin_step(&self.alpha)?;
                let alpha_prime = add_scaled(&self.alpha, &pending.output, beta);
                let loss = pending.loss;
                if joint {
                    deferred = Some(pending);
                } else {
                    enc.finish_step(pending, None)?;
                }
                (alpha_prime, Some(loss))
            }
            None => (self.alpha.clone(), None),
        };

        let batch = sample_batch(&alpha_prime, self.cfg.batch_size, &mut self.sampler);
        let task = self.task;
        let theta = &self.theta;
        let evals: Vec<(Vec<SlotSpan>, f64, Vec<f64>)> = batch
            .par_iter()
            .map(|k| {
                let asm = task.assemble(k)?;
                let params = theta.gather(&asm.spans);
                let (loss, grad) = task.loss_and_grad(&asm.circuit, &params)?;
                Ok((asm.spans, loss, grad))
            })
            .collect::<Result<_>>()?;
        let losses: Vec<f64> = evals.iter().map(|e| e.1).collect();
        let weights = batch_weights(&batch, &alpha_prime)?;
        let batch_loss: f64 = weights.iter().zip(&losses).map(|(w, l)| w * l).sum();

        let scale = match self.cfg.theta_update {
            ThetaUpdate::PerSample => vec![1.0; batch.len()],
            ThetaUpdate::Weighted => weights,
        };
        for ((spans, _, grad), s) in evals.iter().zip(scale) {
            self.theta.add_scaled(spans, grad, -self.cfg.lr_theta * s);
        }

        let g_alpha = grad_alpha(&batch, &losses, &alpha_prime)?;
        if let (Some(enc), Some(pending)) = (self.encoder.as_mut(), deferred) {
            // ∂𝓛/∂F = β ∂𝓛/∂α′
            enc.finish_step(pending, Some(&g_alpha.scale(beta)))?;
        }
        self.alpha_stepper.step(self.alpha.as_mut_slice(), g_alpha.as_slice());
        if !self.alpha.is_finite() {
            return Err(Error::NonFinite("architecture matrix"));
        }

        let k_star = extract_structure(&alpha_prime);
        let asm = self.task.assemble(&k_star)?;
        let argmax_energy = self.task.loss(&asm.circuit, &self.theta.gather(&asm.spans))?;
        self.log.records.push(StepRecord {
            step: self.log.records.len(),
            batch_loss,
            argmax_energy,
            alpha_hash: fnv1a(self.alpha.as_slice()),
            encoder_loss,
        });
        Ok(self.log.records.last().expect("just pushed"))
    }

    /// Runs the configured number of steps and extracts `k*` from the final `α′`.
    pub fn run(&mut self) -> Result<SearchOutcome> {
        for _ in self.log.records.len()..self.cfg.steps {
            self.step()?;
        }
        self.finish()
    }

    /// Extracts `k*` from the current `α′` and records it in the log.
    pub fn finish(&mut self) -> Result<SearchOutcome> {
        let alpha_prime = self.enriched_alpha()?;
        let structure = extract_structure(&alpha_prime);
        self.log.final_structure = Some(structure.clone());
        let asm = self.task.assemble(&structure)?;
        let theta = self.theta.gather(&asm.spans);
        Ok(SearchOutcome {
            structure,
            alpha: self.alpha.clone(),
            alpha_prime,
            theta,
            log: self.log.clone(),
        })
    }
}

/// Result of a finished search.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchOutcome {
    pub structure: Vec<usize>,
    pub alpha: Matrix,
    pub alpha_prime: Matrix,
    /// The shared θ gathered for `structure`, usable as a warm start.
    pub theta: Vec<f64>,
    pub log: TrainLog,
}
