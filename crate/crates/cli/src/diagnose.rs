use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use clap::{Args, Subcommand};
use serde::Serialize;
use tagtransfer_core::corpus::{AnnotatedCorpus, Split};
use tagtransfer_core::diagnostics::{
    anrg, correlation_matrix, per_class_delta, topk_stimulus, topk_to_tsv, transfer_decomposition,
    weight_histogram, ScoreTable,
};
use tagtransfer_core::model::{ActivationRecord, Branch, Checkpoint};

use crate::config::{output_dir, require_input, ExperimentConfig};
use crate::io::{check_aligned, create_dir, read_predictions, to_json};
use crate::UsageError;

pub const CORRELATION_FORMAT: &str = "tagtransfer.correlation";
pub const ANRG_FORMAT: &str = "tagtransfer.anrg";

#[derive(Args, Debug, Clone)]
pub struct Common {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
pub enum DiagnoseCommand {
    /// Positive/negative transfer between two prediction files.
    Transfer {
        /// Predictions of the from-scratch baseline (token, gold, pred).
        #[arg(long)]
        baseline: PathBuf,
        /// Predictions of the transfer scheme.
        #[arg(long)]
        transfer: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Unit-by-unit Pearson correlation of two activation snapshots.
    Correlation {
        /// Snapshot sidecar before adaptation (e.g. epoch 0).
        #[arg(long)]
        before: PathBuf,
        /// Snapshot sidecar after adaptation.
        #[arg(long)]
        after: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Words with the most extreme activation per unit and snapshot.
    Topk {
        /// Snapshot sidecars, one per epoch.
        #[arg(long = "snapshot", required = true)]
        snapshots: Vec<PathBuf>,
        /// Corpus whose tokens produced the activations.
        #[arg(long)]
        corpus: PathBuf,
        /// Overrides diagnostics.top_k.
        #[arg(long)]
        k: Option<usize>,
        #[command(flatten)]
        common: Common,
    },
    /// Histograms of the classifier weights.
    Weights {
        #[arg(long)]
        checkpoint: PathBuf,
        /// Overrides diagnostics.histogram_bins.
        #[arg(long)]
        bins: Option<usize>,
        /// Ensemble member to inspect.
        #[arg(long, default_value_t = 0)]
        member: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Per-class accuracy differences between two prediction files (b - a).
    Perclass {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Average normalized relative gain from a score table CSV.
    Anrg {
        /// CSV with header `approach,dataset1,...` and one row per approach.
        #[arg(long)]
        scores: PathBuf,
        /// Reference approach.
        #[arg(long)]
        reference: String,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Serialize)]
struct CorrelationMeta {
    format: &'static str,
    version: u32,
    units: usize,
    tokens: usize,
    before_epoch: usize,
    after_epoch: usize,
    branch: Branch,
    /// Correlation of each unit with itself before adaptation.
    charge: Vec<f64>,
    mean_charge: f64,
    constant_after: Vec<usize>,
    constant_before: Vec<usize>,
    matrix_file: String,
}

#[derive(Serialize)]
struct AnrgReport {
    format: &'static str,
    version: u32,
    reference: String,
    datasets: Vec<String>,
    anrg: std::collections::BTreeMap<String, f64>,
}

fn out_dir(common: &Common) -> anyhow::Result<(ExperimentConfig, PathBuf)> {
    let c = ExperimentConfig::load_or_default(common.config.as_deref())?;
    let out = output_dir(common.out.as_deref(), &c, "runs/diagnose");
    create_dir(&out)?;
    Ok((c, out))
}

fn emit_json<T: Serialize>(out: &Path, name: &str, value: &T) -> anyhow::Result<()> {
    let json = to_json(value)?;
    fs::write(out.join(name), &json)?;
    print!("{json}");
    Ok(())
}

fn load_snapshot(path: &Path, what: &str) -> anyhow::Result<ActivationRecord<f64>> {
    let p = require_input(Some(&path.to_path_buf()), what)?;
    ActivationRecord::load(&p).with_context(|| format!("reading {}", p.display()))
}

pub fn run(cmd: DiagnoseCommand) -> anyhow::Result<()> {
    match cmd {
        DiagnoseCommand::Transfer {
            baseline,
            transfer,
            common,
        } => {
            let b = read_predictions(&require_input(Some(&baseline), "--baseline")?)?;
            let t = read_predictions(&require_input(Some(&transfer), "--transfer")?)?;
            check_aligned(&b, &t, ("--baseline", "--transfer"))?;
            let report = transfer_decomposition(&b.gold, &b.pred, &t.pred)?;
            let (_, out) = out_dir(&common)?;
            emit_json(&out, "transfer.json", &report)
        }
        DiagnoseCommand::Correlation { before, after, common } => {
            let before = load_snapshot(&before, "--before")?;
            let after = load_snapshot(&after, "--after")?;
            if before.branch != after.branch {
                log::warn!("correlating {} units with {} units", before.branch, after.branch);
            }
            let m = correlation_matrix(&before, &after)?;
            let (_, out) = out_dir(&common)?;
            fs::write(out.join("correlation.csv"), m.to_csv())?;
            let charge = m.diagonal();
            let meta = CorrelationMeta {
                format: CORRELATION_FORMAT,
                version: 1,
                units: m.units,
                tokens: after.tokens(),
                before_epoch: before.epoch,
                after_epoch: after.epoch,
                branch: after.branch,
                mean_charge: charge.iter().sum::<f64>() / charge.len().max(1) as f64,
                charge,
                constant_after: m.constant_after.clone(),
                constant_before: m.constant_before.clone(),
                matrix_file: "correlation.csv".into(),
            };
            emit_json(&out, "correlation.json", &meta)
        }
        DiagnoseCommand::Topk {
            snapshots,
            corpus,
            k,
            common,
        } => {
            let records = snapshots
                .iter()
                .map(|p| load_snapshot(p, "--snapshot"))
                .collect::<anyhow::Result<Vec<_>>>()?;
            let corpus_path = require_input(Some(&corpus), "--corpus")?;
            let corpus = AnnotatedCorpus::read(&corpus_path, Split::Val)
                .with_context(|| format!("reading {}", corpus_path.display()))?;
            let words: Vec<String> = corpus.tokens().map(|t| t.surface.clone()).collect();
            let (c, out) = out_dir(&common)?;
            let units = topk_stimulus(&records, &words, k.unwrap_or(c.diagnostics.top_k))?;
            let path = out.join("topk.tsv");
            fs::write(&path, topk_to_tsv(&units))?;
            eprintln!("wrote {}", path.display());
            Ok(())
        }
        DiagnoseCommand::Weights {
            checkpoint,
            bins,
            member,
            common,
        } => {
            let p = require_input(Some(&checkpoint), "--checkpoint")?;
            let models = Checkpoint::load(&p)
                .with_context(|| format!("reading {}", p.display()))?
                .restore::<f64>()?;
            let model = models
                .get(member)
                .ok_or_else(|| UsageError(format!("--member {member}: checkpoint has {} models", models.len())))?;
            let (c, out) = out_dir(&common)?;
            let h = weight_histogram(model, bins.unwrap_or(c.diagnostics.histogram_bins))?;
            emit_json(&out, "weights.json", &h)
        }
        DiagnoseCommand::Perclass { a, b, common } => {
            let pa = read_predictions(&require_input(Some(&a), "--a")?)?;
            let pb = read_predictions(&require_input(Some(&b), "--b")?)?;
            check_aligned(&pa, &pb, ("--a", "--b"))?;
            let d = per_class_delta(&pa.gold, &pa.pred, &pb.pred)?;
            let (_, out) = out_dir(&common)?;
            emit_json(&out, "perclass.json", &d)
        }
        DiagnoseCommand::Anrg {
            scores,
            reference,
            common,
        } => {
            let p = require_input(Some(&scores), "--scores")?;
            let file = fs::File::open(&p).with_context(|| format!("opening {}", p.display()))?;
            let table = ScoreTable::from_csv(file, &reference)?;
            let anrg = table
                .approaches
                .iter()
                .map(|a| Ok((a.clone(), anrg(&table, a)?)))
                .collect::<tagtransfer_core::Result<_>>()?;
            let report = AnrgReport {
                format: ANRG_FORMAT,
                version: 1,
                reference,
                datasets: table.datasets.clone(),
                anrg,
            };
            let (_, out) = out_dir(&common)?;
            emit_json(&out, "anrg.json", &report)
        }
    }
}
