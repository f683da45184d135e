use std::fmt::Write as _;
use std::fs;
use std::io::BufRead;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    #[default]
    Train,
    Val,
    Test,
}

/// A token as read from disk: surface form plus gold label string.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawToken {
    pub surface: String,
    pub label: String,
}

impl RawToken {
    pub fn new(surface: impl Into<String>, label: impl Into<String>) -> Self {
        Self {
            surface: surface.into(),
            label: label.into(),
        }
    }
}

pub type Sentence = Vec<RawToken>;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotatedCorpus {
    pub sentences: Vec<Sentence>,
    pub split: Split,
}

impl AnnotatedCorpus {
    pub fn new(sentences: Vec<Sentence>, split: Split) -> Result<Self> {
        if sentences.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        if let Some(i) = sentences.iter().position(Vec::is_empty) {
            return Err(Error::Format(format!("sentence {i} is empty")));
        }
        Ok(Self { sentences, split })
    }

    pub fn len(&self) -> usize {
        self.sentences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }

    pub fn token_count(&self) -> usize {
        self.sentences.iter().map(Vec::len).sum()
    }

    pub fn tokens(&self) -> impl Iterator<Item = &RawToken> {
        self.sentences.iter().flatten()
    }

    pub fn labels(&self) -> Vec<String> {
        self.tokens().map(|t| t.label.clone()).collect()
    }

    /// Serializes back to `token<TAB>label` lines with blank-line sentence
    /// separators.
    pub fn to_conll(&self) -> String {
        let mut out = String::new();
        for sentence in &self.sentences {
            for t in sentence {
                let _ = writeln!(out, "{}\t{}", t.surface, t.label);
            }
            out.push('\n');
        }
        out
    }

    pub fn read(path: impl AsRef<Path>, split: Split) -> Result<Self> {
        let file = fs::File::open(path)?;
        parse_conll(std::io::BufReader::new(file), split)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_conll())?;
        Ok(())
    }
}

/// Parses `token<TAB>label` lines. Blank lines end sentences; a trailing
/// `\r` is stripped.
pub fn parse_conll(reader: impl BufRead, split: Split) -> Result<AnnotatedCorpus> {
    parse_columns(reader, 2).map(|rows| {
        rows.into_iter()
            .map(|s| {
                s.into_iter()
                    .map(|mut f| {
                        let label = f.pop().unwrap();
                        RawToken::new(f.pop().unwrap(), label)
                    })
                    .collect()
            })
            .collect()
    })
    .and_then(|sentences| AnnotatedCorpus::new(sentences, split))
}

pub fn parse_conll_str(text: &str, split: Split) -> Result<AnnotatedCorpus> {
    parse_conll(text.as_bytes(), split)
}

/// Reads tab-separated lines with exactly `fields` columns, grouped into
/// blank-line separated sentences.
pub fn parse_columns(reader: impl BufRead, fields: usize) -> Result<Vec<Vec<Vec<String>>>> {
    let mut sentences = Vec::new();
    let mut current = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let line = line.strip_suffix('\r').unwrap_or(&line);
        if line.trim().is_empty() {
            if !current.is_empty() {
                sentences.push(std::mem::take(&mut current));
            }
            continue;
        }
        let parts: Vec<&str> = line.split('\t').collect();
        if parts.len() != fields {
            return Err(Error::Parse {
                line: i + 1,
                msg: format!("expected {fields} tab-separated fields, found {}", parts.len()),
            });
        }
        if parts.iter().any(|p| p.is_empty()) {
            return Err(Error::Parse {
                line: i + 1,
                msg: "empty field".into(),
            });
        }
        current.push(parts.into_iter().map(str::to_string).collect());
    }
    if !current.is_empty() {
        sentences.push(current);
    }
    if sentences.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    Ok(sentences)
}
