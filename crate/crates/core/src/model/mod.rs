//! The tagger, its PretRand extension, checkpoints and activation records.

mod activations;
mod checkpoint;
mod config;
mod count;
mod tagger;

pub use activations::{extract_activations, ActivationMeta, ActivationRecord};
pub use checkpoint::{Checkpoint, ModelState, CHECKPOINT_FORMAT, CHECKPOINT_VERSION};
pub use config::ModelConfig;
pub use count::{linear_params, lstm_params, param_count, ParamCount};
pub use tagger::{Branch, Component, TaggerModel};
