use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Branch, TaggerModel};
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    /// `bins + 1` ascending edges. Bins are half-open except the last.
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
}

impl Histogram {
    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }
}

/// Counts `values` into the bins defined by `edges`. Values outside the
/// edges are dropped.
pub fn histogram_with_edges(values: &[f64], edges: &[f64]) -> Result<Histogram> {
    if edges.len() < 2 || edges.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::Config("histogram edges must be strictly ascending".into()));
    }
    let bins = edges.len() - 1;
    let mut counts = vec![0; bins];
    for &v in values {
        if v < edges[0] || v > edges[bins] {
            continue;
        }
        // first edge strictly greater than v, minus one
        let i = edges.partition_point(|&e| e <= v).saturating_sub(1).min(bins - 1);
        counts[i] += 1;
    }
    Ok(Histogram {
        edges: edges.to_vec(),
        counts,
    })
}

/// `bins` equal-width edges symmetric around zero and covering every value.
pub fn symmetric_edges(values: &[f64], bins: usize) -> Result<Vec<f64>> {
    if bins == 0 {
        return Err(Error::Config("bins must be at least 1".into()));
    }
    let mut m = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if m == 0.0 {
        m = 0.5;
    }
    let width = 2.0 * m / bins as f64;
    let mut edges: Vec<f64> = (0..=bins).map(|i| -m + width * i as f64).collect();
    edges[bins] = m;
    Ok(edges)
}

/// Classifier weight matrices per branch, binned with shared edges.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightHistograms {
    pub edges: Vec<f64>,
    pub branches: BTreeMap<String, Vec<usize>>,
}

pub fn weight_histogram<T: Scalar>(model: &TaggerModel<T>, bins: usize) -> Result<WeightHistograms> {
    let mut branches = vec![(Branch::Pretrained, "cls_p.w")];
    if model.has_pretrand_head() {
        branches.push((Branch::Random, "cls_r.w"));
    }
    let values: Vec<(Branch, Vec<f64>)> = branches
        .into_iter()
        .map(|(b, name)| {
            let w = model
                .params()
                .by_name(name)
                .ok_or_else(|| Error::State(format!("missing parameter {name}")))?;
            Ok((b, w.data().iter().map(|v| v.to_f64_lossy()).collect()))
        })
        .collect::<Result<_>>()?;
    let all: Vec<f64> = values.iter().flat_map(|(_, v)| v.iter().copied()).collect();
    let edges = symmetric_edges(&all, bins)?;
    let mut out = BTreeMap::new();
    for (b, v) in values {
        out.insert(b.to_string(), histogram_with_edges(&v, &edges)?.counts);
    }
    Ok(WeightHistograms {
        edges,
        branches: out,
    })
}
