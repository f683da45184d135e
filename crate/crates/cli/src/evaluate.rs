use std::fs;
use std::path::PathBuf;

use anyhow::Context;
use clap::{Args, ValueEnum};
use tagtransfer_core::corpus::Split;
use tagtransfer_core::model::Checkpoint;
use tagtransfer_core::training::{evaluate_models, predict_labels};

use crate::config::{output_dir, require_input, ExperimentConfig};
use crate::io::{create_dir, predictions_tsv, to_json};
use crate::train::read_corpus;
use crate::UsageError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum TargetSplit {
    Val,
    Test,
}

#[derive(Args, Debug)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// CoNLL corpus to score.
    #[arg(long, conflicts_with = "split")]
    pub corpus: Option<PathBuf>,
    /// Target split named in the config (paths.target_val / paths.target_test).
    #[arg(long, value_enum)]
    pub split: Option<TargetSplit>,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn run(a: EvaluateArgs) -> anyhow::Result<()> {
    let c = ExperimentConfig::load_or_default(a.config.as_deref())?;
    let (path, label, what, split) = match (&a.corpus, a.split) {
        (Some(p), _) => {
            let stem = p.file_stem().map_or("corpus".into(), |s| s.to_string_lossy().into_owned());
            (Some(p.clone()), stem, "--corpus", Split::Test)
        }
        (None, Some(TargetSplit::Val)) => (c.paths.target_val.clone(), "val".into(), "paths.target_val", Split::Val),
        (None, Some(TargetSplit::Test)) => {
            (c.paths.target_test.clone(), "test".into(), "paths.target_test", Split::Test)
        }
        (None, None) => return Err(UsageError("evaluate needs --corpus or --split".into()).into()),
    };
    let corpus = read_corpus(path.as_ref(), what, split)?;
    let ckpt_path = require_input(Some(&a.checkpoint), "--checkpoint")?;
    let models = Checkpoint::load(&ckpt_path)
        .with_context(|| format!("reading {}", ckpt_path.display()))?
        .restore::<f64>()?;
    let result = evaluate_models(&models, &corpus)?;
    let pred = predict_labels(&models, &corpus)?;

    let out = output_dir(a.out.as_deref(), &c, "runs/evaluate");
    create_dir(&out)?;
    let json = to_json(&result)?;
    fs::write(out.join(format!("eval.{label}.json")), &json)?;
    fs::write(out.join(format!("predictions.{label}.tsv")), predictions_tsv(&corpus, &pred))?;
    print!("{json}");
    Ok(())
}
