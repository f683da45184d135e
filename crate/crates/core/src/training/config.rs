use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Adaptation scheme for the target domain.
#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    Scratch,
    FeatureExtraction,
    Sft,
    Pretrand,
    #[serde(rename = "ensemble_2rand")]
    Ensemble2Rand,
    #[serde(rename = "ensemble_1p1r")]
    Ensemble1p1r,
}

impl Scheme {
    pub const ALL: [Scheme; 6] = [
        Scheme::Scratch,
        Scheme::FeatureExtraction,
        Scheme::Sft,
        Scheme::Pretrand,
        Scheme::Ensemble2Rand,
        Scheme::Ensemble1p1r,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::Scratch => "scratch",
            Scheme::FeatureExtraction => "feature_extraction",
            Scheme::Sft => "sft",
            Scheme::Pretrand => "pretrand",
            Scheme::Ensemble2Rand => "ensemble_2rand",
            Scheme::Ensemble1p1r => "ensemble_1p1r",
        }
    }

    /// Whether the scheme starts from a source checkpoint.
    pub fn needs_source(self) -> bool {
        !matches!(self, Scheme::Scratch | Scheme::Ensemble2Rand)
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.name())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scheme::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown scheme {s:?}")))
    }
}

/// Validation metric driving early stopping and best-model selection.
#[derive(Copy, Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    /// Span F1 when the tag-set is BIO, token accuracy otherwise.
    #[default]
    Auto,
    Accuracy,
    SpanF1,
}

#[derive(Copy, Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossReduction {
    /// Sum of token losses over the batch.
    #[default]
    Sum,
    /// Sum of token losses divided by the number of sentences in the batch.
    Mean,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub scheme: Scheme,
    pub learning_rate: f64,
    pub momentum: f64,
    pub batch_size: usize,
    pub patience: usize,
    pub early_stopping: bool,
    pub max_epochs: usize,
    /// Length of the random++ warmup (PretRand only).
    pub warmup_epochs: usize,
    /// When set, the warmup also ends once the validation metric has not
    /// improved for this many warmup epochs; `warmup_epochs` is then a cap.
    pub warmup_patience: Option<usize>,
    /// Train `u`, `v` during the warmup as well.
    pub train_weights_in_warmup: bool,
    pub snapshot_epochs: Vec<usize>,
    pub metric: Metric,
    pub loss_reduction: LossReduction,
    pub min_count: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            scheme: Scheme::Sft,
            learning_rate: 1.5e-2,
            momentum: 0.9,
            batch_size: 16,
            patience: 5,
            early_stopping: true,
            max_epochs: 20,
            warmup_epochs: 5,
            warmup_patience: None,
            train_weights_in_warmup: false,
            snapshot_epochs: vec![0, 5, 10, 15, 20],
            metric: Metric::Auto,
            loss_reduction: LossReduction::Sum,
            min_count: 1,
            seed: 1,
        }
    }
}

impl TrainConfig {
    pub fn with_scheme(mut self, scheme: Scheme) -> Self {
        self.scheme = scheme;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config("learning_rate must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::Config("momentum must lie in [0, 1)".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be at least 1".into()));
        }
        if self.patience == 0 {
            return Err(Error::Config("patience must be at least 1".into()));
        }
        if self.warmup_patience == Some(0) {
            return Err(Error::Config("warmup_patience must be at least 1".into()));
        }
        if let Some(e) = self.snapshot_epochs.iter().find(|&&e| e > self.max_epochs) {
            return Err(Error::Config(format!(
                "snapshot epoch {e} lies beyond max_epochs {}",
                self.max_epochs
            )));
        }
        Ok(())
    }
}
