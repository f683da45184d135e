use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::diagnostics::metrics::flatten_aligned;
use crate::error::Result;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassDelta {
    pub tag: String,
    pub support: usize,
    pub accuracy_a: f64,
    pub accuracy_b: f64,
    pub delta: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PerClassDelta {
    /// Sorted by `delta` descending, then tag.
    pub deltas: Vec<ClassDelta>,
    /// Tags predicted by either system but absent from gold.
    pub excluded: Vec<String>,
}

/// Per-tag accuracy of `pred_b` minus that of `pred_a`, over gold tokens.
pub fn per_class_delta<S: AsRef<str>>(
    gold: &[Vec<S>],
    pred_a: &[Vec<S>],
    pred_b: &[Vec<S>],
) -> Result<PerClassDelta> {
    let flat = flatten_aligned("per_class_delta", &[gold, pred_a, pred_b])?;
    let (g, a, b) = (&flat[0], &flat[1], &flat[2]);
    let mut stats: BTreeMap<&str, (usize, usize, usize)> = BTreeMap::new();
    for i in 0..g.len() {
        let e = stats.entry(g[i]).or_default();
        e.0 += 1;
        e.1 += usize::from(a[i] == g[i]);
        e.2 += usize::from(b[i] == g[i]);
    }
    let mut excluded: Vec<String> = a
        .iter()
        .chain(b.iter())
        .filter(|t| !stats.contains_key(*t))
        .map(|t| t.to_string())
        .collect();
    excluded.sort();
    excluded.dedup();
    let mut deltas: Vec<ClassDelta> = stats
        .into_iter()
        .map(|(tag, (n, ha, hb))| {
            let accuracy_a = ha as f64 / n as f64;
            let accuracy_b = hb as f64 / n as f64;
            ClassDelta {
                tag: tag.to_string(),
                support: n,
                accuracy_a,
                accuracy_b,
                delta: accuracy_b - accuracy_a,
            }
        })
        .collect();
    deltas.sort_by(|x, y| y.delta.total_cmp(&x.delta).then_with(|| x.tag.cmp(&y.tag)));
    Ok(PerClassDelta { deltas, excluded })
}
