use std::fmt::Write as _;
use std::fs;
use std::io::BufReader;
use std::path::Path;

use anyhow::Context;
use serde::Serialize;
use tagtransfer_core::corpus::{parse_columns, AnnotatedCorpus};

use crate::UsageError;

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> anyhow::Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> anyhow::Result<()> {
    fs::write(path, to_json(value)?).with_context(|| format!("writing {}", path.display()))
}

pub fn create_dir(path: &Path) -> anyhow::Result<()> {
    fs::create_dir_all(path).with_context(|| format!("creating {}", path.display()))
}

/// Per-sentence gold and predicted labels read from a prediction file.
#[derive(Clone, Debug, PartialEq)]
pub struct Predictions {
    pub tokens: Vec<Vec<String>>,
    pub gold: Vec<Vec<String>>,
    pub pred: Vec<Vec<String>>,
}

/// Tab-separated `token gold pred` lines with a blank line after each
/// sentence.
pub fn predictions_tsv(corpus: &AnnotatedCorpus, pred: &[Vec<String>]) -> String {
    let mut out = String::new();
    for (sentence, labels) in corpus.sentences.iter().zip(pred) {
        for (tok, p) in sentence.iter().zip(labels) {
            let _ = writeln!(out, "{}\t{}\t{p}", tok.surface, tok.label);
        }
        out.push('\n');
    }
    out
}

pub fn read_predictions(path: &Path) -> anyhow::Result<Predictions> {
    let file = fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let rows = parse_columns(BufReader::new(file), 3).with_context(|| format!("reading {}", path.display()))?;
    let mut p = Predictions {
        tokens: Vec::new(),
        gold: Vec::new(),
        pred: Vec::new(),
    };
    for sentence in rows {
        let col = |i: usize| sentence.iter().map(|f| f[i].clone()).collect::<Vec<_>>();
        p.tokens.push(col(0));
        p.gold.push(col(1));
        p.pred.push(col(2));
    }
    Ok(p)
}

/// Two prediction files must label the same tokens with the same gold tags.
pub fn check_aligned(a: &Predictions, b: &Predictions, names: (&str, &str)) -> anyhow::Result<()> {
    if a.tokens != b.tokens || a.gold != b.gold {
        return Err(UsageError(format!(
            "{} and {} do not cover the same tokens with the same gold labels",
            names.0, names.1
        ))
        .into());
    }
    Ok(())
}
