use std::path::{Path, PathBuf};

use anyhow::Context;
use clap::Args;
use serde::Serialize;
use tagtransfer_core::corpus::{AnnotatedCorpus, PretrainedVectors, Split};
use tagtransfer_core::diagnostics::EvalResult;
use tagtransfer_core::model::{Checkpoint, ModelConfig, TaggerModel};
use tagtransfer_core::training::{self, evaluate_models, predict_labels, RunOutcome, Scheme};

use crate::config::{output_dir, require_input, ExperimentConfig};
use crate::io::{create_dir, predictions_tsv, write_json};
use crate::{parse_scheme, Preset, TrainOverrides, UsageError};

pub const SUMMARY_FORMAT: &str = "tagtransfer.adapt-summary";

#[derive(Args, Debug)]
pub struct PretrainArgs {
    #[command(flatten)]
    pub common: TrainOverrides,
    /// Source training corpus (overrides paths.source_train).
    #[arg(long)]
    pub train: Option<PathBuf>,
    /// Source validation corpus (overrides paths.source_val).
    #[arg(long)]
    pub val: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct AdaptArgs {
    #[command(flatten)]
    pub common: TrainOverrides,
    /// Overrides train.scheme.
    #[arg(long, value_parser = parse_scheme)]
    pub scheme: Option<Scheme>,
    /// Source checkpoint written by `pretrain`.
    #[arg(long)]
    pub from_checkpoint: Option<PathBuf>,
    /// Target training corpus (overrides paths.target_train).
    #[arg(long)]
    pub train: Option<PathBuf>,
    /// Target validation corpus (overrides paths.target_val).
    #[arg(long)]
    pub val: Option<PathBuf>,
    /// Target test corpus (overrides paths.target_test).
    #[arg(long)]
    pub test: Option<PathBuf>,
}

#[derive(Debug, Serialize)]
struct AdaptSummary {
    format: &'static str,
    version: u32,
    scheme: Scheme,
    seed: u64,
    members: usize,
    metric: String,
    val_metric: Option<f64>,
    best_epochs: Vec<usize>,
    val: Option<EvalResult>,
    test: Option<EvalResult>,
}

/// Loads the config named by `--config` and applies the flag overrides.
pub fn resolve_config(o: &TrainOverrides) -> anyhow::Result<ExperimentConfig> {
    let mut c = ExperimentConfig::load_or_default(o.config.as_deref())?;
    if let Some(preset) = o.preset {
        let dims = match preset {
            Preset::Full => ModelConfig::full(c.model.num_classes),
            Preset::Small => ModelConfig::small(c.model.num_classes),
        };
        c.model = dims.with_seed(c.model.seed);
    }
    if let Some(s) = o.seed {
        c.model.seed = s;
        c.train.seed = s;
    }
    if let Some(e) = o.epochs {
        c.train.max_epochs = e;
        let before = c.train.snapshot_epochs.len();
        c.train.snapshot_epochs.retain(|&s| s <= e);
        if c.train.snapshot_epochs.len() < before {
            log::info!("dropped snapshot epochs beyond --epochs {e}");
        }
    }
    if let Some(p) = o.patience {
        c.train.patience = p;
    }
    if let Some(lr) = o.learning_rate {
        c.train.learning_rate = lr;
    }
    if let Some(b) = o.batch_size {
        c.train.batch_size = b;
    }
    if o.no_early_stopping {
        c.train.early_stopping = false;
    }
    if let Some(e) = &o.embeddings {
        c.paths.embeddings = Some(e.clone());
    }
    Ok(c)
}

pub fn read_corpus(path: Option<&PathBuf>, what: &str, split: Split) -> anyhow::Result<AnnotatedCorpus> {
    let path = require_input(path, what)?;
    AnnotatedCorpus::read(&path, split).with_context(|| format!("reading {}", path.display()))
}

fn read_optional(path: Option<&PathBuf>, what: &str, split: Split) -> anyhow::Result<Option<AnnotatedCorpus>> {
    path.map(|p| read_corpus(Some(p), what, split)).transpose()
}

fn load_vectors(c: &ExperimentConfig) -> anyhow::Result<Option<PretrainedVectors>> {
    match &c.paths.embeddings {
        None => Ok(None),
        Some(p) => {
            let p = require_input(Some(p), "--embeddings")?;
            let v = PretrainedVectors::load(&p).with_context(|| format!("reading {}", p.display()))?;
            log::info!("loaded {} vectors of dimension {}", v.vectors.len(), v.dim);
            Ok(Some(v))
        }
    }
}

/// Writes run records and activation snapshots. Single runs use `run.json`
/// and `snapshots/`; ensemble members `run.{i}.json` and `snapshots/member{i}/`.
fn write_runs(dir: &Path, runs: &[RunOutcome<f64>]) -> anyhow::Result<()> {
    for (i, run) in runs.iter().enumerate() {
        let (name, sub) = if runs.len() == 1 {
            ("run.json".to_string(), "snapshots".to_string())
        } else {
            (format!("run.{i}.json"), format!("snapshots/member{i}"))
        };
        let mut record = run.record.clone();
        record.checkpoint = Some("checkpoint.json".into());
        if !run.snapshots.is_empty() {
            create_dir(&dir.join(&sub))?;
        }
        for (sref, act) in record.snapshots.iter_mut().zip(&run.snapshots) {
            let stem = format!("epoch{:03}.{}", act.epoch, act.branch);
            act.save(dir.join(&sub), &stem)?;
            sref.file = Some(format!("{sub}/{stem}.json"));
        }
        write_json(&dir.join(name), &record)?;
    }
    Ok(())
}

pub fn run_pretrain(a: PretrainArgs) -> anyhow::Result<()> {
    let mut c = resolve_config(&a.common)?;
    if let Some(t) = a.train {
        c.paths.source_train = Some(t);
    }
    if let Some(v) = a.val {
        c.paths.source_val = Some(v);
    }
    let train = read_corpus(c.paths.source_train.as_ref(), "--train (paths.source_train)", Split::Train)?;
    let val = read_optional(c.paths.source_val.as_ref(), "--val (paths.source_val)", Split::Val)?;
    let vectors = load_vectors(&c)?;
    let out = output_dir(a.common.out.as_deref(), &c, "runs/pretrain");
    let trained = training::pretrain::<f64>(&train, val.as_ref(), &c.model, &c.train, vectors.as_ref())?;
    create_dir(&out)?;
    Checkpoint::single(trained.model()).save(out.join("checkpoint.json"))?;
    write_runs(&out, &trained.runs)?;
    match trained.val_metric {
        Some(m) => eprintln!("best epoch {}: val {m:.4}", trained.run().record.best_epoch),
        None => eprintln!("trained {} epochs", trained.run().record.last_epoch()),
    }
    eprintln!("wrote {}", out.display());
    Ok(())
}

fn evaluate_split(
    models: &[TaggerModel<f64>],
    corpus: Option<&AnnotatedCorpus>,
    out: &Path,
    name: &str,
) -> anyhow::Result<Option<EvalResult>> {
    let Some(corpus) = corpus else { return Ok(None) };
    let pred = predict_labels(models, corpus)?;
    std::fs::write(out.join(format!("predictions.{name}.tsv")), predictions_tsv(corpus, &pred))?;
    Ok(Some(evaluate_models(models, corpus)?))
}

pub fn run_adapt(a: AdaptArgs) -> anyhow::Result<()> {
    let mut c = resolve_config(&a.common)?;
    if let Some(s) = a.scheme {
        c.train.scheme = s;
    }
    for (flag, slot) in [
        (a.train, &mut c.paths.target_train),
        (a.val, &mut c.paths.target_val),
        (a.test, &mut c.paths.target_test),
    ] {
        if flag.is_some() {
            *slot = flag;
        }
    }
    let scheme = c.train.scheme;
    let source = match (&a.from_checkpoint, scheme.needs_source()) {
        (Some(p), false) => {
            log::warn!("scheme {scheme} trains from scratch; ignoring --from-checkpoint {}", p.display());
            None
        }
        (None, true) => {
            return Err(UsageError(format!("scheme {scheme} requires --from-checkpoint")).into());
        }
        (None, false) => None,
        (Some(p), true) => {
            let p = require_input(Some(p), "--from-checkpoint")?;
            let ckpt = Checkpoint::load(&p).with_context(|| format!("reading {}", p.display()))?;
            Some(ckpt.restore_single::<f64>()?)
        }
    };
    let train = read_corpus(c.paths.target_train.as_ref(), "--train (paths.target_train)", Split::Train)?;
    let val = read_optional(c.paths.target_val.as_ref(), "--val (paths.target_val)", Split::Val)?;
    let test = read_optional(c.paths.target_test.as_ref(), "--test (paths.target_test)", Split::Test)?;
    let vectors = load_vectors(&c)?;
    let out = output_dir(a.common.out.as_deref(), &c, &format!("runs/{scheme}"));

    let trained = training::adapt::<f64>(source.as_ref(), &train, val.as_ref(), &c.model, &c.train, vectors.as_ref())?;
    create_dir(&out)?;
    let checkpoint = if trained.models.len() == 1 {
        Checkpoint::single(trained.model())
    } else {
        Checkpoint::ensemble(&trained.models)
    };
    checkpoint.save(out.join("checkpoint.json"))?;
    write_runs(&out, &trained.runs)?;
    let summary = AdaptSummary {
        format: SUMMARY_FORMAT,
        version: 1,
        scheme,
        seed: c.train.seed,
        members: trained.models.len(),
        metric: trained.run().record.metric.clone(),
        val_metric: trained.val_metric,
        best_epochs: trained.runs.iter().map(|r| r.record.best_epoch).collect(),
        val: evaluate_split(&trained.models, val.as_ref(), &out, "val")?,
        test: evaluate_split(&trained.models, test.as_ref(), &out, "test")?,
    };
    write_json(&out.join("summary.json"), &summary)?;
    if let Some(m) = summary.val_metric {
        eprintln!("{scheme}: val {} {m:.4}", summary.metric);
    }
    eprintln!("wrote {}", out.display());
    Ok(())
}
