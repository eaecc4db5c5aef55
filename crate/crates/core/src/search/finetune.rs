use super::optim::{Optimizer, Stepper};
use super::task::Task;
use crate::error::{Error, Result};
use crate::sim::CircuitIR;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FineTuneConfig {
    pub iters: usize,
    pub lr: f64,
    pub optimizer: Optimizer,
}

impl Default for FineTuneConfig {
    fn default() -> Self {
        Self {
            iters: 200,
            lr: 0.05,
            optimizer: Optimizer::GradientDescent,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FineTuneResult {
    pub theta: Vec<f64>,
    /// Loss at the start of every iteration, `iters` entries.
    pub history: Vec<f64>,
    /// Loss after the last update.
    pub final_loss: f64,
}

impl FineTuneResult {
    pub fn best(&self) -> f64 {
        self.history.iter().copied().fold(self.final_loss, f64::min)
    }
}

/// Trains the parameters of a fixed circuit on the task's loss.
pub fn fine_tune(task: &Task, circuit: &CircuitIR, theta_init: &[f64], cfg: &FineTuneConfig) -> Result<FineTuneResult> {
    if theta_init.len() != circuit.n_params {
        return Err(Error::ParamLength {
            expected: circuit.n_params,
            got: theta_init.len(),
        });
    }
    let mut theta = theta_init.to_vec();
    let mut stepper = Stepper::new(cfg.optimizer, cfg.lr, theta.len());
    let mut history = Vec::with_capacity(cfg.iters);
    for _ in 0..cfg.iters {
        let (loss, grad) = task.loss_and_grad(circuit, &theta)?;
        history.push(loss);
        stepper.step(&mut theta, &grad);
    }
    let final_loss = task.loss(circuit, &theta)?;
    Ok(FineTuneResult {
        theta,
        history,
        final_loss,
    })
}

/// First index after which the history never leaves `[min, min + ε]`,
/// or `None` when the final value is already outside it.
pub fn asp(history: &[f64], epsilon: f64) -> Result<Option<usize>> {
    if history.is_empty() {
        return Err(Error::EmptyHistory);
    }
    let min = history.iter().copied().fold(f64::INFINITY, f64::min);
    let settled = history.iter().rev().take_while(|v| (*v - min).abs() <= epsilon).count();
    Ok((settled > 0).then(|| history.len() - settled))
}
