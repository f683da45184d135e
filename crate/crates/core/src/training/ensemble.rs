use crate::autodiff::{argmax, softmax, Array};
use crate::corpus::AnnotatedCorpus;
use crate::diagnostics::{evaluate, is_bio_tagset, EvalResult};
use crate::error::{Error, Result};
use crate::model::TaggerModel;
use crate::scalar::Scalar;
use crate::training::Metric;

fn check_compatible<T: Scalar>(models: &[TaggerModel<T>]) -> Result<()> {
    let first = models
        .first()
        .ok_or_else(|| Error::Config("ensemble has no members".into()))?;
    for m in &models[1..] {
        if m.num_classes() != first.num_classes() {
            return Err(Error::Config(format!(
                "ensemble members have {} and {} classes",
                first.num_classes(),
                m.num_classes()
            )));
        }
        if m.vocab().tags() != first.vocab().tags() {
            return Err(Error::Config("ensemble members order their tags differently".into()));
        }
    }
    Ok(())
}

/// Mean of the members' per-token softmax probabilities, `n × C`. Each
/// member encodes `surfaces` with its own vocabulary.
pub fn ensemble_probabilities<T: Scalar, S: AsRef<str>>(
    models: &[TaggerModel<T>],
    surfaces: &[S],
) -> Result<Array<T>> {
    check_compatible(models)?;
    let mut sum: Option<Array<T>> = None;
    for m in models {
        let logits = m.logits(&m.vocab().encode_unlabeled(surfaces))?;
        let mut probs = Array::zeros(logits.shape());
        for r in 0..logits.rows() {
            probs.row_slice_mut(r).copy_from_slice(&softmax(logits.row_slice(r)));
        }
        match sum.as_mut() {
            Some(s) => s.add_assign(&probs)?,
            None => sum = Some(probs),
        }
    }
    let mut mean = sum.expect("at least one member");
    mean.scale_in_place(T::one() / T::from_usize_lossy(models.len()));
    Ok(mean)
}

/// Argmax of the averaged probabilities; ties go to the lowest class id.
pub fn ensemble_predict<T: Scalar, S: AsRef<str>>(models: &[TaggerModel<T>], surfaces: &[S]) -> Result<Vec<usize>> {
    let p = ensemble_probabilities(models, surfaces)?;
    Ok((0..p.rows()).map(|r| argmax(p.row_slice(r))).collect())
}

/// Predicted labels for every sentence of `corpus`. A single model decodes
/// its own logits; several models are averaged.
pub fn predict_labels<T: Scalar>(models: &[TaggerModel<T>], corpus: &AnnotatedCorpus) -> Result<Vec<Vec<String>>> {
    check_compatible(models)?;
    let tags = models[0].vocab().tags();
    corpus
        .sentences
        .iter()
        .map(|s| {
            let surfaces: Vec<&str> = s.iter().map(|t| t.surface.as_str()).collect();
            let ids = if let [m] = models {
                m.predict(&m.vocab().encode_unlabeled(&surfaces))?
            } else {
                ensemble_predict(models, &surfaces)?
            };
            Ok(ids.into_iter().map(|i| tags[i].clone()).collect())
        })
        .collect()
}

/// Evaluates models on a labelled corpus. Every gold label must belong to the
/// models' tag-set.
pub fn evaluate_models<T: Scalar>(models: &[TaggerModel<T>], corpus: &AnnotatedCorpus) -> Result<EvalResult> {
    check_compatible(models)?;
    let vocab = models[0].vocab();
    if let Some(t) = corpus.tokens().find(|t| vocab.tag_id(&t.label).is_none()) {
        return Err(Error::Label(format!("{} (not in the model tag-set)", t.label)));
    }
    let pred = predict_labels(models, corpus)?;
    let gold: Vec<Vec<String>> = corpus
        .sentences
        .iter()
        .map(|s| s.iter().map(|t| t.label.clone()).collect())
        .collect();
    evaluate(&gold, &pred, Some(is_bio_tagset(vocab.tags())))
}

/// Validation metric of an ensemble on `corpus`.
pub fn ensemble_score<T: Scalar>(models: &[TaggerModel<T>], corpus: &AnnotatedCorpus, metric: Metric) -> Result<f64> {
    let eval = evaluate_models(models, corpus)?;
    let bio = is_bio_tagset(models[0].vocab().tags());
    Ok(match (metric, &eval.span) {
        (Metric::SpanF1, Some(s)) => s.f1,
        (Metric::Auto, Some(s)) if bio => s.f1,
        (Metric::SpanF1, None) => return Err(Error::Config("span F1 needs a BIO tag-set".into())),
        _ => eval.token_accuracy,
    })
}
