//! biLSTM sequence tagging with transfer-learning adaptation schemes.
//!
//! The crate covers the whole pipeline: a small reverse-mode autodiff engine,
//! CoNLL ingestion and a synthetic domain-shift generator, the tagger itself
//! (word/char representation, biLSTM feature extractor, linear classifier and
//! the dual-branch PretRand head), training loops for every adaptation
//! scheme, and the diagnostics used to study transfer (positive/negative
//! transfer, neuron charge, top-k stimuli, aNRG).
//!
//! Numeric code is generic over [`Scalar`] (`f32` or `f64`); the aliases
//! below fix the precision used by the command-line tool.

pub mod autodiff;
pub mod corpus;
pub mod diagnostics;
pub mod error;
pub mod model;
pub mod scalar;
pub mod training;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Array64 = autodiff::Array<f64>;
pub type Graph64 = autodiff::Graph<f64>;

pub type Tagger = model::TaggerModel<f64>;
pub type Tagger32 = model::TaggerModel<f32>;
pub type Activations = model::ActivationRecord<f64>;
