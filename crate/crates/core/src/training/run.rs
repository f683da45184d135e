use crate::autodiff::{GradStore, Graph, ParamStore, Sgd};
use crate::corpus::{batch_iter, EncodedSentence};
use crate::diagnostics::{is_bio_tagset, span_f1_corpus, token_accuracy};
use crate::error::{Error, Result};
use crate::model::{extract_activations, ActivationRecord, Branch, Component, TaggerModel};
use crate::scalar::Scalar;
use crate::training::{
    EarlyStopping, EpochRecord, LossReduction, Metric, Phase, RunRecord, Scheme, SnapshotRef, TrainConfig,
};

/// A finished run: the record and the activation snapshots it took.
#[derive(Clone, Debug)]
pub struct RunOutcome<T> {
    pub record: RunRecord,
    pub snapshots: Vec<ActivationRecord<T>>,
}

/// Components updated by `scheme` in `phase`.
pub fn trainable_components(scheme: Scheme, phase: Phase, config: &TrainConfig) -> Vec<Component> {
    use Component::*;
    match (scheme, phase) {
        (Scheme::FeatureExtraction, _) => vec![ClassifierPretrained],
        (_, Phase::Warmup) => {
            let mut c = vec![FeatureRandom, ClassifierRandom];
            if config.train_weights_in_warmup {
                c.push(Weighting);
            }
            c
        }
        _ => Component::ALL.to_vec(),
    }
}

fn resolve_metric<T: Scalar>(model: &TaggerModel<T>, metric: Metric) -> Metric {
    match metric {
        Metric::Auto if is_bio_tagset(model.vocab().tags()) => Metric::SpanF1,
        Metric::Auto => Metric::Accuracy,
        m => m,
    }
}

fn metric_name(metric: Metric) -> &'static str {
    match metric {
        Metric::SpanF1 => "span_f1",
        _ => "accuracy",
    }
}

/// Predicted class ids for every sentence.
pub fn predict_all<T: Scalar>(model: &TaggerModel<T>, sentences: &[EncodedSentence]) -> Result<Vec<Vec<usize>>> {
    sentences.iter().map(|s| model.predict(s)).collect()
}

/// Token accuracy or span F1 of `model` on encoded sentences.
pub fn score<T: Scalar>(model: &TaggerModel<T>, sentences: &[EncodedSentence], metric: Metric) -> Result<f64> {
    let pred = predict_all(model, sentences)?;
    match resolve_metric(model, metric) {
        Metric::SpanF1 => {
            let tags = model.vocab().tags();
            let name = |ids: &[usize]| -> Vec<&str> { ids.iter().map(|&i| tags[i].as_str()).collect() };
            let gold: Vec<Vec<&str>> = sentences
                .iter()
                .map(|s| s.iter().map(|t| tags[t.gold_label].as_str()).collect())
                .collect();
            let pred: Vec<Vec<&str>> = pred.iter().map(|p| name(p)).collect();
            Ok(span_f1_corpus(&gold, &pred)?.f1)
        }
        _ => {
            let gold: Vec<usize> = sentences.iter().flatten().map(|t| t.gold_label).collect();
            token_accuracy(&gold, &pred.concat())
        }
    }
}

/// One pass over `train` in seeded batches. Returns the mean token loss.
fn run_epoch<T: Scalar>(
    model: &mut TaggerModel<T>,
    train: &[EncodedSentence],
    config: &TrainConfig,
    epoch: usize,
    sgd: &mut Sgd<T>,
    grads: &mut GradStore<T>,
    mask: &[bool],
) -> Result<f64> {
    let mut total = 0.0;
    let mut tokens = 0usize;
    for batch in batch_iter(train.len(), config.batch_size, config.seed, epoch) {
        grads.zero();
        for &i in &batch {
            let mut g = Graph::new();
            let loss = model.loss(&mut g, &train[i])?;
            total += g.value(loss).item().to_f64_lossy();
            tokens += train[i].len();
            g.backward(loss, grads)?;
        }
        if config.loss_reduction == LossReduction::Mean {
            grads.scale(T::one() / T::from_usize_lossy(batch.len()));
        }
        sgd.step(model.params_mut(), grads, |id| mask[id.index()])?;
    }
    Ok(total / tokens.max(1) as f64)
}

fn mask_for<T: Scalar>(model: &TaggerModel<T>, components: &[Component]) -> Vec<bool> {
    model
        .params()
        .ids()
        .map(|id| model.component_of(id).map_or(false, |c| components.contains(&c)))
        .collect()
}

fn snapshot<T: Scalar>(
    model: &TaggerModel<T>,
    sentences: &[EncodedSentence],
    epoch: usize,
    record: &mut RunRecord,
    out: &mut Vec<ActivationRecord<T>>,
) -> Result<()> {
    let mut branches = vec![Branch::Pretrained];
    if model.has_pretrand_head() {
        branches.push(Branch::Random);
    }
    for branch in branches {
        out.push(extract_activations(model, sentences, branch, epoch)?);
        record.snapshots.push(SnapshotRef {
            epoch,
            branch,
            file: None,
        });
    }
    Ok(())
}

/// Trains `model` in place under `config.scheme` and leaves it at the best
/// validation epoch (or the last epoch when no validation set is given).
///
/// Epoch 0 evaluates the initial parameters and competes for best epoch.
/// During a PretRand warmup non-improving epochs do not count towards the
/// patience. Activations of the validation set (the training set when no
/// validation set is given) are snapshotted at `config.snapshot_epochs`.
pub fn train_loop<T: Scalar>(
    model: &mut TaggerModel<T>,
    train: &[EncodedSentence],
    val: Option<&[EncodedSentence]>,
    config: &TrainConfig,
) -> Result<RunOutcome<T>> {
    config.validate()?;
    if train.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    if config.early_stopping && val.is_none() {
        return Err(Error::Config("early stopping needs a validation split".into()));
    }
    if val.is_some_and(|v| v.is_empty()) {
        return Err(Error::EmptyCorpus);
    }
    let scheme = config.scheme;
    let pretrand = scheme == Scheme::Pretrand;
    if pretrand && !model.has_pretrand_head() {
        return Err(Error::Config("pretrand training needs a model with a PretRand head".into()));
    }
    let metric = resolve_metric(model, config.metric);
    let snap_set = val.unwrap_or(train);
    let mut record = RunRecord::new(scheme, config.seed, metric_name(metric));
    let mut snapshots = Vec::new();

    let mut sgd = Sgd::new(
        T::from_f64_lossy(config.learning_rate),
        T::from_f64_lossy(config.momentum),
    )?;
    sgd.register(model.params());
    let mut grads = GradStore::zeros_like(model.params());
    let mut stopper = EarlyStopping::new(config.patience);
    let mut warmup_stopper = config.warmup_patience.map(EarlyStopping::new);
    let mut best: Option<ParamStore<T>> = None;

    let evaluate = |m: &TaggerModel<T>| -> Result<Option<f64>> { val.map(|v| score(m, v, metric)).transpose() };

    let initial = evaluate(model)?;
    let mut improved = false;
    if let Some(m) = initial {
        improved = stopper.update(0, m, false).improved;
        if let Some(w) = warmup_stopper.as_mut() {
            w.update(0, m, true);
        }
        best = Some(model.params().clone());
    }
    record.epochs.push(EpochRecord {
        epoch: 0,
        phase: Phase::Init,
        train_loss: None,
        val_metric: initial,
        improved,
    });
    if config.snapshot_epochs.contains(&0) {
        snapshot(model, snap_set, 0, &mut record, &mut snapshots)?;
    }

    let mut in_warmup = pretrand && config.warmup_epochs > 0;
    for epoch in 1..=config.max_epochs {
        let phase = match (pretrand, in_warmup) {
            (true, true) => Phase::Warmup,
            (true, false) => Phase::Joint,
            _ => Phase::Train,
        };
        let mask = mask_for(model, &trainable_components(scheme, phase, config));
        let loss = run_epoch(model, train, config, epoch, &mut sgd, &mut grads, &mask)?;
        let val_metric = evaluate(model)?;
        let mut stop = false;
        let mut improved = false;
        if let Some(m) = val_metric {
            let d = stopper.update(epoch, m, phase != Phase::Warmup);
            improved = d.improved;
            stop = config.early_stopping && d.stop;
            if improved {
                best = Some(model.params().clone());
            }
        }
        record.epochs.push(EpochRecord {
            epoch,
            phase,
            train_loss: Some(loss),
            val_metric,
            improved,
        });
        if config.snapshot_epochs.contains(&epoch) {
            snapshot(model, snap_set, epoch, &mut record, &mut snapshots)?;
        }
        if in_warmup {
            let patience_done = match (warmup_stopper.as_mut(), val_metric) {
                (Some(w), Some(m)) => w.update(epoch, m, true).stop,
                _ => false,
            };
            if epoch >= config.warmup_epochs || patience_done {
                in_warmup = false;
                record.warmup_end = Some(epoch);
            }
        }
        if stop {
            record.stopped_early = true;
            break;
        }
    }

    match (stopper.best(), best) {
        (Some((epoch, m)), Some(params)) => {
            model.copy_params_from(&params)?;
            record.best_epoch = epoch;
            record.best_val_metric = Some(m);
        }
        _ => record.best_epoch = record.last_epoch(),
    }
    log::info!(
        "{scheme}: best epoch {} of {} ({} {:?})",
        record.best_epoch,
        record.last_epoch(),
        record.metric,
        record.best_val_metric
    );
    Ok(RunOutcome { record, snapshots })
}
