use std::io::Read;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Scores of several approaches on several datasets.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoreTable {
    pub approaches: Vec<String>,
    pub datasets: Vec<String>,
    /// `scores[a][d]`
    pub scores: Vec<Vec<f64>>,
    pub reference: String,
}

impl ScoreTable {
    pub fn new(
        approaches: Vec<String>,
        datasets: Vec<String>,
        scores: Vec<Vec<f64>>,
        reference: impl Into<String>,
    ) -> Result<Self> {
        let reference = reference.into();
        if approaches.is_empty() || datasets.is_empty() {
            return Err(Error::Config("score table is empty".into()));
        }
        if scores.len() != approaches.len() || scores.iter().any(|r| r.len() != datasets.len()) {
            return Err(Error::Config("score table is not rectangular".into()));
        }
        if scores.iter().flatten().any(|s| !s.is_finite()) {
            return Err(Error::Numeric("non-finite score".into()));
        }
        if !approaches.contains(&reference) {
            return Err(Error::Config(format!("reference approach {reference:?} not in table")));
        }
        Ok(Self {
            approaches,
            datasets,
            scores,
            reference,
        })
    }

    /// Reads `approach,<dataset>,...` CSV with one row per approach.
    pub fn from_csv(reader: impl Read, reference: &str) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let header = rdr.headers().map_err(|e| Error::Format(e.to_string()))?.clone();
        let datasets: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
        let mut approaches = Vec::new();
        let mut scores = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| Error::Parse {
                line: i + 2,
                msg: e.to_string(),
            })?;
            approaches.push(rec.get(0).unwrap_or_default().to_string());
            let row = rec
                .iter()
                .skip(1)
                .map(|f| {
                    f.parse::<f64>().map_err(|_| Error::Parse {
                        line: i + 2,
                        msg: format!("bad score {f:?}"),
                    })
                })
                .collect::<Result<Vec<f64>>>()?;
            scores.push(row);
        }
        Self::new(approaches, datasets, scores, reference)
    }

    fn row(&self, approach: &str) -> Result<&[f64]> {
        self.approaches
            .iter()
            .position(|a| a == approach)
            .map(|i| self.scores[i].as_slice())
            .ok_or_else(|| Error::Config(format!("approach {approach:?} not in table")))
    }
}

/// Average normalized relative gain of `approach` over the reference:
/// the mean over datasets of `(s - s_ref) / (s_max - s_ref)`. Datasets where
/// no approach differs from the reference at the top are skipped.
pub fn anrg(table: &ScoreTable, approach: &str) -> Result<f64> {
    let reference = table.row(&table.reference)?;
    let scores = table.row(approach)?;
    let mut total = 0.0;
    let mut used = 0usize;
    for (d, name) in table.datasets.iter().enumerate() {
        let s_max = table.scores.iter().map(|r| r[d]).fold(f64::NEG_INFINITY, f64::max);
        let denom = s_max - reference[d];
        if denom == 0.0 {
            log::warn!("aNRG: skipping dataset {name}, best score equals reference");
            continue;
        }
        total += (scores[d] - reference[d]) / denom;
        used += 1;
    }
    if used == 0 {
        return Err(Error::Config("aNRG undefined: every dataset is degenerate".into()));
    }
    Ok(total / used as f64)
}
