use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Parsed BIO label.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Bio<'a> {
    Outside,
    Begin(&'a str),
    Inside(&'a str),
}

pub fn parse_bio(label: &str) -> Result<Bio<'_>> {
    if label == "O" {
        return Ok(Bio::Outside);
    }
    match label.split_once('-') {
        Some(("B", t)) if !t.is_empty() => Ok(Bio::Begin(t)),
        Some(("I", t)) if !t.is_empty() => Ok(Bio::Inside(t)),
        _ => Err(Error::Label(label.to_string())),
    }
}

/// True when every tag is `O`, `B-X` or `I-X` and at least one `B-` exists.
pub fn is_bio_tagset<S: AsRef<str>>(tags: &[S]) -> bool {
    let mut has_begin = false;
    for t in tags {
        match parse_bio(t.as_ref()) {
            Ok(Bio::Begin(_)) => has_begin = true,
            Ok(_) => {}
            Err(_) => return false,
        }
    }
    has_begin
}

/// Labelled span, `start..=end` inclusive.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Span {
    pub kind: String,
    pub start: usize,
    pub end: usize,
}

/// Extracts spans. An `I-X` that does not continue a span of type `X` opens
/// a new span, as if it were `B-X`.
pub fn extract_spans<S: AsRef<str>>(labels: &[S]) -> Result<Vec<Span>> {
    let mut spans = Vec::new();
    let mut open: Option<(String, usize)> = None;
    for (i, l) in labels.iter().enumerate() {
        let bio = parse_bio(l.as_ref())?;
        let continues = matches!((&bio, &open), (Bio::Inside(t), Some((k, _))) if *t == k);
        if continues {
            continue;
        }
        if let Some((kind, start)) = open.take() {
            spans.push(Span { kind, start, end: i - 1 });
        }
        match bio {
            Bio::Outside => {}
            Bio::Begin(t) | Bio::Inside(t) => open = Some((t.to_string(), i)),
        }
    }
    if let Some((kind, start)) = open {
        spans.push(Span {
            kind,
            start,
            end: labels.len() - 1,
        });
    }
    Ok(spans)
}

/// Exact-match span counts and the derived precision, recall and F1.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SpanScore {
    pub gold_spans: usize,
    pub pred_spans: usize,
    pub matched: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl SpanScore {
    pub fn from_counts(gold_spans: usize, pred_spans: usize, matched: usize) -> Self {
        let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
        let precision = ratio(matched, pred_spans);
        let recall = ratio(matched, gold_spans);
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        Self {
            gold_spans,
            pred_spans,
            matched,
            precision,
            recall,
            f1,
        }
    }
}

/// Span F1 over one label sequence.
pub fn span_f1<S: AsRef<str>>(gold: &[S], pred: &[S]) -> Result<SpanScore> {
    span_f1_corpus(std::slice::from_ref(&gold), std::slice::from_ref(&pred))
}

/// Span F1 over sentences; spans never cross sentence boundaries.
pub fn span_f1_corpus<S: AsRef<str>, G: AsRef<[S]>>(gold: &[G], pred: &[G]) -> Result<SpanScore> {
    if gold.len() != pred.len() {
        return Err(Error::shape("span_f1", &[gold.len()], &[pred.len()]));
    }
    let (mut g_total, mut p_total, mut matched) = (0, 0, 0);
    for (g, p) in gold.iter().zip(pred) {
        let (g, p) = (g.as_ref(), p.as_ref());
        if g.len() != p.len() {
            return Err(Error::shape("span_f1", &[g.len()], &[p.len()]));
        }
        let gs: BTreeSet<Span> = extract_spans(g)?.into_iter().collect();
        let ps: BTreeSet<Span> = extract_spans(p)?.into_iter().collect();
        g_total += gs.len();
        p_total += ps.len();
        matched += gs.intersection(&ps).count();
    }
    Ok(SpanScore::from_counts(g_total, p_total, matched))
}
