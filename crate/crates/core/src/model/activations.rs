use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::autodiff::Array;
use crate::corpus::EncodedSentence;
use crate::error::{Error, Result};
use crate::model::{Branch, TaggerModel};
use crate::scalar::Scalar;

/// Feature-extractor outputs over a fixed token sequence: `N × H`, rows in
/// corpus order.
#[derive(Clone, Debug, PartialEq)]
pub struct ActivationRecord<T> {
    pub epoch: usize,
    pub branch: Branch,
    pub h: Array<T>,
}

/// JSON sidecar describing an activation matrix stored as raw little-endian
/// `f64` values in row-major order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ActivationMeta {
    pub format: String,
    pub version: u32,
    pub epoch: usize,
    pub branch: Branch,
    pub tokens: usize,
    pub hidden: usize,
    pub dtype: String,
    pub data_file: String,
}

const ACTIVATION_FORMAT: &str = "tagtransfer.activations";

impl<T: Scalar> ActivationRecord<T> {
    pub fn tokens(&self) -> usize {
        self.h.rows()
    }

    pub fn hidden(&self) -> usize {
        self.h.cols()
    }

    /// Column `j`: unit `j` over all tokens.
    pub fn unit(&self, j: usize) -> Vec<T> {
        (0..self.tokens()).map(|r| self.h.row_slice(r)[j]).collect()
    }

    /// Writes `<stem>.bin` and `<stem>.json`; returns both paths.
    pub fn save(&self, dir: impl AsRef<Path>, stem: &str) -> Result<(PathBuf, PathBuf)> {
        let dir = dir.as_ref();
        let bin = dir.join(format!("{stem}.bin"));
        let json = dir.join(format!("{stem}.json"));
        let mut bytes = Vec::with_capacity(self.h.len() * 8);
        for v in self.h.data() {
            bytes.extend_from_slice(&v.to_f64_lossy().to_le_bytes());
        }
        fs::write(&bin, bytes)?;
        let meta = ActivationMeta {
            format: ACTIVATION_FORMAT.into(),
            version: 1,
            epoch: self.epoch,
            branch: self.branch,
            tokens: self.tokens(),
            hidden: self.hidden(),
            dtype: "f64le".into(),
            data_file: format!("{stem}.bin"),
        };
        fs::write(&json, serde_json::to_string_pretty(&meta)?)?;
        Ok((bin, json))
    }

    /// Loads from a sidecar path; the data file is resolved next to it.
    pub fn load(sidecar: impl AsRef<Path>) -> Result<Self> {
        let sidecar = sidecar.as_ref();
        let meta: ActivationMeta = serde_json::from_str(&fs::read_to_string(sidecar)?)?;
        if meta.format != ACTIVATION_FORMAT || meta.dtype != "f64le" {
            return Err(Error::Format(format!("unsupported activation file {}", meta.format)));
        }
        let bin = sidecar.with_file_name(&meta.data_file);
        let bytes = fs::read(bin)?;
        if bytes.len() != meta.tokens * meta.hidden * 8 {
            return Err(Error::Format(format!(
                "activation data has {} bytes, expected {}",
                bytes.len(),
                meta.tokens * meta.hidden * 8
            )));
        }
        let data = bytes
            .chunks_exact(8)
            .map(|c| T::from_f64_lossy(f64::from_le_bytes(c.try_into().expect("8 bytes"))))
            .collect();
        Ok(Self {
            epoch: meta.epoch,
            branch: meta.branch,
            h: Array::new(vec![meta.tokens, meta.hidden], data)?,
        })
    }
}

/// Runs the feature extractor of `branch` over every sentence and stacks the
/// per-token outputs.
pub fn extract_activations<T: Scalar>(
    model: &TaggerModel<T>,
    sentences: &[EncodedSentence],
    branch: Branch,
    epoch: usize,
) -> Result<ActivationRecord<T>> {
    let width = model.feature_dim(branch);
    let mut data = Vec::new();
    let mut rows = 0;
    for s in sentences {
        let f = model.features(s, branch)?;
        rows += f.rows();
        data.extend_from_slice(f.data());
    }
    if rows == 0 {
        return Err(Error::EmptyCorpus);
    }
    Ok(ActivationRecord {
        epoch,
        branch,
        h: Array::new(vec![rows, width], data)?,
    })
}
