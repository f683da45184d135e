use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Branch;
use crate::training::Scheme;

pub const RUN_FORMAT: &str = "tagtransfer.run";
pub const RUN_VERSION: u32 = 1;

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    /// Evaluation of the initial parameters, before any update.
    Init,
    Train,
    /// random++ warmup: only the random branch is updated.
    Warmup,
    /// PretRand joint training after the warmup.
    Joint,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub phase: Phase,
    /// Mean token loss over the epoch; absent at epoch 0.
    pub train_loss: Option<f64>,
    pub val_metric: Option<f64>,
    pub improved: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SnapshotRef {
    pub epoch: usize,
    pub branch: Branch,
    /// Sidecar file, once the snapshot has been written.
    pub file: Option<String>,
}

/// Per-run metrics, persisted as JSON.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub format: String,
    pub version: u32,
    pub scheme: Scheme,
    pub seed: u64,
    /// `accuracy` or `span_f1`.
    pub metric: String,
    pub epochs: Vec<EpochRecord>,
    pub best_epoch: usize,
    pub best_val_metric: Option<f64>,
    pub stopped_early: bool,
    /// Last warmup epoch, for PretRand runs.
    pub warmup_end: Option<usize>,
    pub checkpoint: Option<String>,
    pub snapshots: Vec<SnapshotRef>,
}

impl RunRecord {
    pub(crate) fn new(scheme: Scheme, seed: u64, metric: &str) -> Self {
        Self {
            format: RUN_FORMAT.into(),
            version: RUN_VERSION,
            scheme,
            seed,
            metric: metric.into(),
            epochs: Vec::new(),
            best_epoch: 0,
            best_val_metric: None,
            stopped_early: false,
            warmup_end: None,
            checkpoint: None,
            snapshots: Vec::new(),
        }
    }

    pub fn last_epoch(&self) -> usize {
        self.epochs.last().map_or(0, |e| e.epoch)
    }

    pub fn train_losses(&self) -> Vec<f64> {
        self.epochs.iter().filter_map(|e| e.train_loss).collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let record: Self = serde_json::from_str(&fs::read_to_string(path)?)?;
        if record.format != RUN_FORMAT || record.version != RUN_VERSION {
            return Err(Error::Format(format!(
                "unsupported run record {} v{}",
                record.format, record.version
            )));
        }
        Ok(record)
    }
}
