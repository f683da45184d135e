use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::autodiff::{Array, ArrayRecord};
use crate::corpus::Vocabulary;
use crate::error::{Error, Result};
use crate::model::{ModelConfig, TaggerModel};
use crate::scalar::Scalar;

pub const CHECKPOINT_FORMAT: &str = "tagtransfer.checkpoint";
pub const CHECKPOINT_VERSION: u32 = 1;

/// Everything needed to rebuild one model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelState {
    pub config: ModelConfig,
    pub vocabulary: Vocabulary,
    pub parameters: BTreeMap<String, ArrayRecord>,
}

impl ModelState {
    pub fn capture<T: Scalar>(model: &TaggerModel<T>) -> Self {
        Self {
            config: model.config().clone(),
            vocabulary: model.vocab().clone(),
            parameters: model
                .params()
                .iter()
                .map(|(_, name, value)| (name.to_string(), value.to_record()))
                .collect(),
        }
    }

    pub fn restore<T: Scalar>(&self) -> Result<TaggerModel<T>> {
        let values = self
            .parameters
            .iter()
            .map(|(k, v)| Ok((k.clone(), Array::from_record(v)?)))
            .collect::<Result<BTreeMap<_, _>>>()?;
        TaggerModel::from_named(self.config.clone(), self.vocabulary.clone(), values)
    }
}

/// Versioned JSON container with one model, or several for an ensemble.
///
/// Parameters are keyed by name in sorted order and written with shortest
/// round-trip float formatting, so save → load → save is byte-identical.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Checkpoint {
    pub format: String,
    pub version: u32,
    pub models: Vec<ModelState>,
}

impl Checkpoint {
    pub fn new(models: Vec<ModelState>) -> Self {
        Self {
            format: CHECKPOINT_FORMAT.into(),
            version: CHECKPOINT_VERSION,
            models,
        }
    }

    pub fn single<T: Scalar>(model: &TaggerModel<T>) -> Self {
        Self::new(vec![ModelState::capture(model)])
    }

    pub fn ensemble<T: Scalar>(models: &[TaggerModel<T>]) -> Self {
        Self::new(models.iter().map(ModelState::capture).collect())
    }

    pub fn is_ensemble(&self) -> bool {
        self.models.len() > 1
    }

    pub fn restore<T: Scalar>(&self) -> Result<Vec<TaggerModel<T>>> {
        self.models.iter().map(ModelState::restore).collect()
    }

    /// The single model of a non-ensemble checkpoint.
    pub fn restore_single<T: Scalar>(&self) -> Result<TaggerModel<T>> {
        match self.models.as_slice() {
            [state] => state.restore(),
            _ => Err(Error::Config(format!(
                "expected one model, checkpoint holds {}",
                self.models.len()
            ))),
        }
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        Ok(serde_json::to_vec(self)?)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let c: Checkpoint = serde_json::from_slice(bytes)?;
        if c.format != CHECKPOINT_FORMAT || c.version != CHECKPOINT_VERSION {
            return Err(Error::Format(format!("unsupported checkpoint {} v{}", c.format, c.version)));
        }
        if c.models.is_empty() {
            return Err(Error::Format("checkpoint holds no model".into()));
        }
        Ok(c)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_bytes()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_bytes(&fs::read(path)?)
    }
}
