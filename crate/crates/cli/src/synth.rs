use std::collections::BTreeMap;
use std::path::PathBuf;

use clap::Args;
use serde::Serialize;
use tagtransfer_core::corpus::{synth_corpus, SplitStats, SynthSpec};
use tagtransfer_core::model::{param_count, ModelConfig};

use crate::config::{output_dir, ExperimentConfig};
use crate::io::{create_dir, to_json, write_json};
use crate::Preset;

pub const MANIFEST_FORMAT: &str = "tagtransfer.synth-manifest";

#[derive(Args, Debug)]
pub struct SynthArgs {
    /// Experiment config; its `synth` section is the base spec.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Probability of a target-only surface form.
    #[arg(long)]
    pub rho: Option<f64>,
    #[arg(long)]
    pub vocab_size: Option<usize>,
    #[arg(long)]
    pub num_tags: Option<usize>,
    #[arg(long)]
    pub source_train: Option<usize>,
    #[arg(long)]
    pub source_val: Option<usize>,
    #[arg(long)]
    pub target_train: Option<usize>,
    #[arg(long)]
    pub target_val: Option<usize>,
    /// Sentences in the target test split (0 disables it).
    #[arg(long)]
    pub target_test: Option<usize>,
}

#[derive(Serialize)]
struct Manifest {
    format: &'static str,
    version: u32,
    seed: u64,
    spec: SynthSpec,
    files: BTreeMap<String, String>,
    stats: BTreeMap<String, SplitStats>,
}

pub fn run_synth(a: SynthArgs) -> anyhow::Result<()> {
    // Corpus paths in the config usually point at the files about to be written.
    let c = match &a.config {
        Some(p) => ExperimentConfig::read(p)?,
        None => ExperimentConfig::default(),
    };
    let mut spec = c.synth.clone();
    let set = |slot: &mut usize, v: Option<usize>| {
        if let Some(v) = v {
            *slot = v;
        }
    };
    if let Some(r) = a.rho {
        spec.rho = r;
    }
    set(&mut spec.vocab_size, a.vocab_size);
    set(&mut spec.num_tags, a.num_tags);
    set(&mut spec.source_train_sentences, a.source_train);
    set(&mut spec.source_val_sentences, a.source_val);
    set(&mut spec.target_train_sentences, a.target_train);
    set(&mut spec.target_val_sentences, a.target_val);
    set(&mut spec.target_test_sentences, a.target_test);
    let corpora = synth_corpus(&spec, a.seed)?;

    let out = output_dir(a.out.as_deref(), &c, "data/synth");
    create_dir(&out)?;
    let mut files = BTreeMap::new();
    for (name, corpus) in corpora.splits() {
        let file = format!("{name}.conll");
        corpus.write(out.join(&file))?;
        files.insert(name.to_string(), file);
    }
    let manifest = Manifest {
        format: MANIFEST_FORMAT,
        version: 1,
        seed: a.seed,
        spec,
        files,
        stats: corpora.stats(),
    };
    write_json(&out.join("manifest.json"), &manifest)?;
    eprintln!("wrote {}", out.display());
    Ok(())
}

#[derive(Args, Debug)]
pub struct ParamsArgs {
    /// Experiment config; its `model` section gives the dimensions.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Replace the model dimensions by a preset.
    #[arg(long, value_enum)]
    pub preset: Option<Preset>,
    /// Number of classes (overrides model.num_classes).
    #[arg(long)]
    pub classes: Option<usize>,
    /// Word vocabulary size.
    #[arg(long)]
    pub words: usize,
    /// Character vocabulary size.
    #[arg(long, default_value_t = 100)]
    pub chars: usize,
    /// Also write params.json to this directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn run_params(a: ParamsArgs) -> anyhow::Result<()> {
    let c = ExperimentConfig::load_or_default(a.config.as_deref())?;
    let mut model = match a.preset {
        Some(Preset::Full) => ModelConfig::full(c.model.num_classes),
        Some(Preset::Small) => ModelConfig::small(c.model.num_classes),
        None => c.model.clone(),
    };
    if let Some(k) = a.classes {
        model.num_classes = k;
    }
    model.validate()?;
    let count = param_count(&model, a.words, a.chars);
    let json = to_json(&count)?;
    if let Some(dir) = &a.out {
        create_dir(dir)?;
        std::fs::write(dir.join("params.json"), &json)?;
    }
    print!("{json}");
    Ok(())
}
