//! Architecture search over operation pools.
//!
//! A structure `k` picks one pool operation per placeholder. The logits
//! `α` (p × l) define independent softmax distributions per placeholder;
//! SA variants add `β F(·)` from the [`encoder`](crate::encoder) before
//! sampling. Each step samples a batch, trains the shared circuit
//! parameters on the sampled circuits and moves `α` along the exact
//! gradient of the self-normalized batch loss.

mod distribution;
mod finetune;
mod optim;
mod task;
mod train;

pub use distribution::{
    batch_loss, batch_weights, encoder_input, enriched_alpha, extract_structure, grad_alpha, placeholder_probs,
    sample_batch, structure_prob,
};
pub use finetune::{asp, fine_tune, FineTuneConfig, FineTuneResult};
pub use optim::{Adam, Optimizer, Stepper};
pub use task::{Objective, ParameterPool, Task};
pub use train::{
    fnv1a, rng_for, RngStream, Search, SearchConfig, SearchOutcome, SearchVariant, StepRecord, ThetaUpdate, TrainLog,
};
