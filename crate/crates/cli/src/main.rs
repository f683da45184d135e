//! `tagtransfer`: pretrain, adapt, evaluate and diagnose sequence taggers.

mod config;
mod diagnose;
mod evaluate;
mod io;
mod synth;
mod train;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use tagtransfer_core::training::Scheme;

/// Bad invocation or configuration detected by the CLI itself.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct UsageError(pub String);

#[derive(Parser, Debug)]
#[command(name = "tagtransfer", version, about = "Transfer learning for neural sequence taggers")]
struct Cli {
    /// Log progress (info level). RUST_LOG takes precedence.
    #[arg(short, long, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a seeded synthetic source/target corpus.
    Synth(synth::SynthArgs),
    /// Train a tagger on the source domain.
    Pretrain(train::PretrainArgs),
    /// Adapt to the target domain under a transfer scheme.
    Adapt(train::AdaptArgs),
    /// Score a checkpoint on a corpus.
    Evaluate(evaluate::EvaluateArgs),
    /// Transfer and neuron diagnostics.
    #[command(subcommand)]
    Diagnose(diagnose::DiagnoseCommand),
    /// Closed-form parameter counts.
    Params(synth::ParamsArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    Full,
    Small,
}

/// Overrides shared by the training commands.
#[derive(Args, Debug, Clone, Default)]
pub struct TrainOverrides {
    /// Experiment config (JSON).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Seed for both model initialisation and batching.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub patience: Option<usize>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    /// Train for the full epoch budget; required when there is no validation split.
    #[arg(long)]
    pub no_early_stopping: bool,
    /// Replace the model dimensions by a preset.
    #[arg(long, value_enum)]
    pub preset: Option<Preset>,
    /// Word vectors in `word v1 ... vd` text format.
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
}

pub fn parse_scheme(s: &str) -> Result<Scheme, String> {
    s.parse().map_err(|e: tagtransfer_core::Error| e.to_string())
}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.downcast_ref::<UsageError>().is_some() {
            return 2;
        }
        if let Some(e) = cause.downcast_ref::<tagtransfer_core::Error>() {
            return if e.is_usage() { 2 } else { 3 };
        }
    }
    3
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Synth(a) => synth::run_synth(a),
        Command::Pretrain(a) => train::run_pretrain(a),
        Command::Adapt(a) => train::run_adapt(a),
        Command::Evaluate(a) => evaluate::run(a),
        Command::Diagnose(c) => diagnose::run(c),
        Command::Params(a) => synth::run_params(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.verbose { "info" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
