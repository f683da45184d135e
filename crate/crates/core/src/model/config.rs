use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dimensions of the tagger. `fe_hidden` and `random_branch_k` are per
/// direction, so the feature extractor emits `2 * fe_hidden` values.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelConfig {
    pub char_emb_dim: usize,
    pub char_lstm_hidden: usize,
    pub word_emb_dim: usize,
    pub fe_hidden: usize,
    pub random_branch_k: usize,
    pub num_classes: usize,
    pub seed: u64,
}

impl ModelConfig {
    /// Full-size dimensions: 50-d characters, 100-unit char biLSTM, 300-d
    /// words, 200 units per direction, 200 random units.
    pub fn full(num_classes: usize) -> Self {
        Self {
            char_emb_dim: 50,
            char_lstm_hidden: 100,
            word_emb_dim: 300,
            fe_hidden: 200,
            random_branch_k: 200,
            num_classes,
            seed: 0,
        }
    }

    /// Desk-scale dimensions used for synthetic experiments and tests.
    pub fn small(num_classes: usize) -> Self {
        Self {
            char_emb_dim: 8,
            char_lstm_hidden: 12,
            word_emb_dim: 24,
            fe_hidden: 24,
            random_branch_k: 24,
            num_classes,
            seed: 0,
        }
    }

    /// The wider from-scratch baseline: same model with 400 units.
    pub fn scratch_400(num_classes: usize) -> Self {
        Self {
            fe_hidden: 400,
            ..Self::full(num_classes)
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn word_repr_dim(&self) -> usize {
        self.word_emb_dim + 2 * self.char_lstm_hidden
    }

    pub fn validate(&self) -> Result<()> {
        let dims = [
            self.char_emb_dim,
            self.char_lstm_hidden,
            self.word_emb_dim,
            self.fe_hidden,
            self.random_branch_k,
        ];
        if dims.iter().any(|&d| d == 0) {
            return Err(Error::Config("model dimensions must be positive".into()));
        }
        if self.num_classes < 2 {
            return Err(Error::Config(format!(
                "need at least 2 classes, got {}",
                self.num_classes
            )));
        }
        Ok(())
    }
}

/// Full-size dimensions with the class count left to be inferred (0).
impl Default for ModelConfig {
    fn default() -> Self {
        Self::full(0)
    }
}
