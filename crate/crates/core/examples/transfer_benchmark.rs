//! Pretrains on the synthetic source domain, adapts to the target domain with
//! several schemes and prints validation accuracy and transfer statistics.
//!
//! cargo run --release -p tagtransfer-core --example transfer_benchmark -- [seed]

use std::time::Instant;

use tagtransfer_core::corpus::{synth_corpus, SynthSpec};
use tagtransfer_core::diagnostics::transfer_decomposition;
use tagtransfer_core::model::ModelConfig;
use tagtransfer_core::training::{adapt, predict_labels, pretrain, Scheme, TrainConfig};
use tagtransfer_core::Result;

fn main() -> Result<()> {
    let seed: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(1);
    let spec = SynthSpec::default();
    let data = synth_corpus(&spec, seed)?;
    let model_config = ModelConfig::small(0).with_seed(seed);
    let train_config = TrainConfig {
        max_epochs: std::env::var("EPOCHS").ok().and_then(|s| s.parse().ok()).unwrap_or(30),
        snapshot_epochs: vec![],
        seed,
        ..TrainConfig::default()
    };
    let t = Instant::now();
    let source = pretrain::<f64>(
        &data.source_train,
        Some(&data.source_val),
        &model_config,
        &train_config,
        None,
    )?;
    println!("source val {:?} ({:.1?})", source.val_metric, t.elapsed());

    let gold: Vec<Vec<String>> = data.target_val.sentences.iter().map(|s| s.iter().map(|t| t.label.clone()).collect()).collect();
    let mut scratch_pred: Option<Vec<Vec<String>>> = None;
    for scheme in [Scheme::Scratch, Scheme::Sft, Scheme::FeatureExtraction, Scheme::Pretrand] {
        let t = Instant::now();
        let cfg = TrainConfig {
            scheme,
            ..train_config.clone()
        };
        let run = adapt(
            Some(source.model()),
            &data.target_train,
            Some(&data.target_val),
            &model_config,
            &cfg,
            None,
        )?;
        let pred = predict_labels(&run.models, &data.target_val)?;
        let transfer = match &scratch_pred {
            Some(base) => {
                let r = transfer_decomposition(&gold, base, &pred)?;
                format!("PT {:.4} NT {:.4} G {:.4}", r.positive_transfer, r.negative_transfer, r.gain)
            }
            None => String::new(),
        };
        println!(
            "{scheme:>20} val {:.4} best epoch {} {transfer} ({:.1?})",
            run.val_metric.unwrap_or(f64::NAN),
            run.run().record.best_epoch,
            t.elapsed()
        );
        if scheme == Scheme::Scratch {
            scratch_pred = Some(pred);
        }
    }
    Ok(())
}
