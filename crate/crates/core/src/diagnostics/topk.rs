use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ActivationRecord;
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Stimulus {
    pub token: usize,
    pub word: String,
    pub activation: f64,
}

/// For one unit: per snapshot epoch, the `k` tokens firing it most
/// positively (descending) and most negatively (ascending).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UnitTopK {
    pub unit: usize,
    pub epochs: Vec<usize>,
    pub positive: Vec<Vec<Stimulus>>,
    pub negative: Vec<Vec<Stimulus>>,
}

/// Ranks tokens per unit and epoch. Ties keep ascending token order.
pub fn topk_stimulus<T: Scalar>(
    snapshots: &[ActivationRecord<T>],
    words: &[String],
    k: usize,
) -> Result<Vec<UnitTopK>> {
    let first = snapshots
        .first()
        .ok_or_else(|| Error::Config("top-k needs at least one snapshot".into()))?;
    let (n, h) = (first.tokens(), first.hidden());
    for s in snapshots {
        if s.tokens() != n || s.hidden() != h {
            return Err(Error::shape("topk_stimulus", first.h.shape(), s.h.shape()));
        }
    }
    if words.len() != n {
        return Err(Error::shape("topk_stimulus", &[n], &[words.len()]));
    }
    if k == 0 || k > n {
        return Err(Error::Config(format!("k must lie in 1..={n}, got {k}")));
    }
    let epochs: Vec<usize> = snapshots.iter().map(|s| s.epoch).collect();
    let mut out = Vec::with_capacity(h);
    for unit in 0..h {
        let mut positive = Vec::with_capacity(snapshots.len());
        let mut negative = Vec::with_capacity(snapshots.len());
        for s in snapshots {
            let acts: Vec<f64> = s.unit(unit).into_iter().map(|v| v.to_f64_lossy()).collect();
            let mut order: Vec<usize> = (0..n).collect();
            // stable sort keeps index order among equal activations
            order.sort_by(|&a, &b| acts[b].total_cmp(&acts[a]));
            let pick = |idx: &[usize]| -> Vec<Stimulus> {
                idx.iter()
                    .map(|&t| Stimulus {
                        token: t,
                        word: words[t].clone(),
                        activation: acts[t],
                    })
                    .collect()
            };
            positive.push(pick(&order[..k]));
            order.sort_by(|&a, &b| acts[a].total_cmp(&acts[b]).then(a.cmp(&b)));
            negative.push(pick(&order[..k]));
        }
        out.push(UnitTopK {
            unit,
            epochs: epochs.clone(),
            positive,
            negative,
        });
    }
    Ok(out)
}

/// TSV with one block per unit and direction; columns are epochs, rows are
/// ranks, cells are `word:activation`.
pub fn topk_to_tsv(units: &[UnitTopK]) -> String {
    let mut out = String::new();
    for u in units {
        for (label, table) in [("best+", &u.positive), ("best-", &u.negative)] {
            let _ = writeln!(out, "# unit {} {label}", u.unit);
            let header: Vec<String> = u.epochs.iter().map(|e| format!("epoch_{e}")).collect();
            let _ = writeln!(out, "rank\t{}", header.join("\t"));
            let k = table.first().map_or(0, Vec::len);
            for r in 0..k {
                let cells: Vec<String> = table
                    .iter()
                    .map(|col| format!("{}:{}", col[r].word, col[r].activation))
                    .collect();
                let _ = writeln!(out, "{}\t{}", r + 1, cells.join("\t"));
            }
            out.push('\n');
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::Array;
    use crate::model::Branch;

    fn rec(epoch: usize, n: usize, h: usize, data: Vec<f64>) -> ActivationRecord<f64> {
        ActivationRecord {
            epoch,
            branch: Branch::Pretrained,
            h: Array::matrix(n, h, data).unwrap(),
        }
    }

    fn words(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("w{i}")).collect()
    }

    #[test]
    fn constant_activations_follow_index_order() {
        let r = topk_stimulus(&[rec(0, 4, 1, vec![0.5; 4])], &words(4), 2).unwrap();
        let pos: Vec<usize> = r[0].positive[0].iter().map(|s| s.token).collect();
        let neg: Vec<usize> = r[0].negative[0].iter().map(|s| s.token).collect();
        assert_eq!(pos, vec![0, 1]);
        assert_eq!(neg, vec![0, 1]);
    }

    #[test]
    fn k_equals_n_is_full_sort() {
        let r = topk_stimulus(&[rec(3, 3, 1, vec![0.1, 0.9, -0.2])], &words(3), 3).unwrap();
        let pos: Vec<usize> = r[0].positive[0].iter().map(|s| s.token).collect();
        assert_eq!(pos, vec![1, 0, 2]);
        let neg: Vec<usize> = r[0].negative[0].iter().map(|s| s.token).collect();
        assert_eq!(neg, vec![2, 0, 1]);
        assert_eq!(r[0].epochs, vec![3]);
    }

    #[test]
    fn k_larger_than_tokens() {
        assert!(matches!(
            topk_stimulus(&[rec(0, 2, 1, vec![0.0, 1.0])], &words(2), 3),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn tsv_layout() {
        let r = topk_stimulus(
            &[rec(0, 2, 1, vec![0.0, 1.0]), rec(5, 2, 1, vec![1.0, 0.0])],
            &words(2),
            1,
        )
        .unwrap();
        let tsv = topk_to_tsv(&r);
        assert!(tsv.contains("rank\tepoch_0\tepoch_5"));
        assert!(tsv.contains("1\tw1:1\tw0:1"));
    }
}
