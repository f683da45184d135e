use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use tagtransfer_core::corpus::SynthSpec;
use tagtransfer_core::model::ModelConfig;
use tagtransfer_core::training::TrainConfig;

use crate::UsageError;

/// Environment variable that overrides the output directory of every command.
pub const OUTPUT_DIR_ENV: &str = "TAGTRANSFER_OUTPUT_DIR";

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Paths {
    pub source_train: Option<PathBuf>,
    pub source_val: Option<PathBuf>,
    pub target_train: Option<PathBuf>,
    pub target_val: Option<PathBuf>,
    pub target_test: Option<PathBuf>,
    pub embeddings: Option<PathBuf>,
    pub output_dir: Option<PathBuf>,
}

impl Paths {
    fn inputs_mut(&mut self) -> [(&'static str, &mut Option<PathBuf>); 6] {
        [
            ("source_train", &mut self.source_train),
            ("source_val", &mut self.source_val),
            ("target_train", &mut self.target_train),
            ("target_val", &mut self.target_val),
            ("target_test", &mut self.target_test),
            ("embeddings", &mut self.embeddings),
        ]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DiagnosticsConfig {
    pub top_k: usize,
    pub histogram_bins: usize,
}

impl Default for DiagnosticsConfig {
    fn default() -> Self {
        Self {
            top_k: 10,
            histogram_bins: 20,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub paths: Paths,
    pub model: ModelConfig,
    pub train: TrainConfig,
    pub diagnostics: DiagnosticsConfig,
    pub synth: SynthSpec,
}

impl ExperimentConfig {
    /// Reads a config file and resolves relative paths against the file's
    /// directory without checking that they exist.
    pub fn read(path: &Path) -> anyhow::Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| UsageError(format!("cannot read config {}: {e}", path.display())))?;
        let mut config: Self = serde_json::from_str(&text)
            .map_err(|e| UsageError(format!("invalid config {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        for (_, p) in config.paths.inputs_mut() {
            if let Some(p) = p {
                *p = base.join(&*p);
            }
        }
        if let Some(out) = &mut config.paths.output_dir {
            *out = base.join(&*out);
        }
        Ok(config)
    }

    /// Like [`ExperimentConfig::read`], but every input path must exist.
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let mut config = Self::read(path)?;
        for (name, p) in config.paths.inputs_mut() {
            if let Some(p) = p {
                if !p.exists() {
                    return Err(UsageError(format!("paths.{name}: {} does not exist", p.display())).into());
                }
            }
        }
        Ok(config)
    }

    pub fn load_or_default(path: Option<&Path>) -> anyhow::Result<Self> {
        path.map_or_else(|| Ok(Self::default()), Self::load)
    }
}

/// Output directory: flag, then the environment variable, then the config,
/// then `fallback`.
pub fn output_dir(flag: Option<&Path>, config: &ExperimentConfig, fallback: &str) -> PathBuf {
    if let Some(p) = flag {
        return p.to_path_buf();
    }
    if let Some(p) = std::env::var_os(OUTPUT_DIR_ENV).filter(|v| !v.is_empty()) {
        return PathBuf::from(p);
    }
    config
        .paths
        .output_dir
        .clone()
        .unwrap_or_else(|| PathBuf::from(fallback))
}

/// Checks that an input file exists, naming the flag or key that sets it.
pub fn require_input(path: Option<&PathBuf>, what: &str) -> anyhow::Result<PathBuf> {
    let p = path.ok_or_else(|| UsageError(format!("missing required input: {what}")))?;
    if !p.is_file() {
        return Err(UsageError(format!("{what}: {} does not exist", p.display())).into());
    }
    Ok(p.clone())
}
