use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::diagnostics::{is_bio_tagset, span_f1_corpus, SpanScore};
use crate::error::{Error, Result};

/// Fraction of positions where `pred` equals `gold`.
pub fn token_accuracy<L: PartialEq>(gold: &[L], pred: &[L]) -> Result<f64> {
    if gold.len() != pred.len() {
        return Err(Error::shape("token_accuracy", &[gold.len()], &[pred.len()]));
    }
    if gold.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let hits = gold.iter().zip(pred).filter(|(g, p)| g == p).count();
    Ok(hits as f64 / gold.len() as f64)
}

pub(crate) fn flatten_aligned<'a, S: AsRef<str>>(
    op: &'static str,
    seqs: &[&'a [Vec<S>]],
) -> Result<Vec<Vec<&'a str>>> {
    let first = seqs[0];
    for s in &seqs[1..] {
        if s.len() != first.len() {
            return Err(Error::shape(op, &[first.len()], &[s.len()]));
        }
        for (a, b) in first.iter().zip(s.iter()) {
            if a.len() != b.len() {
                return Err(Error::shape(op, &[a.len()], &[b.len()]));
            }
        }
    }
    Ok(seqs
        .iter()
        .map(|s| s.iter().flatten().map(AsRef::as_ref).collect())
        .collect())
}

/// Evaluation summary of one prediction set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalResult {
    pub tokens: usize,
    pub token_accuracy: f64,
    /// Present when the gold labels use a BIO scheme.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub span: Option<SpanScore>,
    pub per_class_accuracy: BTreeMap<String, f64>,
    pub per_class_support: BTreeMap<String, usize>,
    /// gold label -> predicted label -> count.
    pub confusion: BTreeMap<String, BTreeMap<String, usize>>,
}

impl EvalResult {
    /// Span F1 when available, token accuracy otherwise.
    pub fn headline(&self) -> f64 {
        self.span.as_ref().map_or(self.token_accuracy, |s| s.f1)
    }
}

/// Scores sentence-aligned predictions. Span F1 is computed when `bio` is
/// true, or when `None` and the gold labels look like BIO.
pub fn evaluate<S: AsRef<str>>(gold: &[Vec<S>], pred: &[Vec<S>], bio: Option<bool>) -> Result<EvalResult> {
    let flat = flatten_aligned("evaluate", &[gold, pred])?;
    let (g, p) = (&flat[0], &flat[1]);
    let token_accuracy = token_accuracy(g, p)?;
    let mut support: BTreeMap<String, usize> = BTreeMap::new();
    let mut hits: BTreeMap<String, usize> = BTreeMap::new();
    let mut confusion: BTreeMap<String, BTreeMap<String, usize>> = BTreeMap::new();
    for (&gl, &pl) in g.iter().zip(p) {
        *support.entry(gl.to_string()).or_default() += 1;
        *hits.entry(gl.to_string()).or_default() += usize::from(gl == pl);
        *confusion
            .entry(gl.to_string())
            .or_default()
            .entry(pl.to_string())
            .or_default() += 1;
    }
    let per_class_accuracy = support
        .iter()
        .map(|(k, &n)| (k.clone(), hits[k] as f64 / n as f64))
        .collect();
    let use_bio = match bio {
        Some(b) => b,
        None => {
            let labels: Vec<&str> = support.keys().map(String::as_str).collect();
            is_bio_tagset(&labels)
        }
    };
    let span = if use_bio {
        Some(span_f1_corpus(gold, pred)?)
    } else {
        None
    };
    Ok(EvalResult {
        tokens: g.len(),
        token_accuracy,
        span,
        per_class_accuracy,
        per_class_support: support,
        confusion,
    })
}
