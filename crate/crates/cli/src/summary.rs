//! `summary.json` and `evaluate.json` layouts.

use sadqas::pools::GateCounts;
use serde::{Deserialize, Serialize};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Counts {
    pub total: usize,
    pub parameterized: usize,
    pub controlled: usize,
}

impl From<GateCounts> for Counts {
    fn from(c: GateCounts) -> Self {
        Self {
            total: c.total,
            parameterized: c.parameterized,
            controlled: c.controlled,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoisyResult {
    pub label: String,
    pub model: String,
    pub channel: String,
    pub p: f64,
    pub gate_p: f64,
    /// Scaled energy, or infidelity for fidelity runs.
    pub loss: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FidelityCell {
    pub column: String,
    pub fidelity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialSummary {
    pub seed: u64,
    /// Terminal noise the search ran under (fidelity runs).
    pub environment: Option<f64>,
    pub structure: Vec<usize>,
    pub labels: Vec<String>,
    pub gate_counts: Counts,
    /// Loss of the argmax structure at the last search step.
    pub search_final_loss: f64,
    /// Scaled energy (or infidelity) at the start of fine-tuning.
    pub initial_energy: f64,
    pub best_energy: f64,
    pub final_energy: f64,
    /// Unscaled energy at the fine-tuned angles, for energy tasks.
    pub final_raw_energy: Option<f64>,
    pub asp: Option<usize>,
    pub noisy: Vec<NoisyResult>,
    pub fidelity: Vec<FidelityCell>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub schema_version: u32,
    pub command: String,
    pub task: String,
    pub variant: String,
    pub pool: String,
    pub n_qubits: usize,
    pub placeholders: usize,
    pub blocks: usize,
    pub steps: usize,
    pub batch_size: usize,
    pub beta: f64,
    pub trials: Vec<TrialSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoisyAggregate {
    pub label: String,
    pub mean: f64,
    pub std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub schema_version: u32,
    pub command: String,
    pub circuit: String,
    pub seeds: Vec<u64>,
    pub iters: usize,
    pub final_mean: f64,
    pub final_std: f64,
    pub best_mean: f64,
    /// ASP of the mean trajectory.
    pub asp: Option<usize>,
    pub trial_asp: Vec<Option<usize>>,
    pub noisy: Vec<NoisyAggregate>,
}
