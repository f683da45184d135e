use serde::{Deserialize, Serialize};

use crate::diagnostics::metrics::flatten_aligned;
use crate::error::{Error, Result};

/// One token whose correctness changed between baseline and transfer.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChangedToken {
    pub sentence: usize,
    pub token: usize,
    pub gold: String,
    pub baseline: String,
    pub transfer: String,
}

/// Positive/negative transfer accounting of a transfer scheme against a
/// baseline trained from scratch.
///
/// `positive_transfer` is the share of tokens the baseline got wrong and the
/// transfer model gets right; `negative_transfer` the share the baseline got
/// right and the transfer model gets wrong. Their difference equals the
/// accuracy gain.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransferReport {
    pub tokens: usize,
    pub corrected: usize,
    pub falsified: usize,
    pub positive_transfer: f64,
    pub negative_transfer: f64,
    pub gain: f64,
    pub baseline_accuracy: f64,
    pub transfer_accuracy: f64,
    pub corrected_tokens: Vec<ChangedToken>,
    pub falsified_tokens: Vec<ChangedToken>,
}

pub fn transfer_decomposition<S: AsRef<str>>(
    gold: &[Vec<S>],
    baseline: &[Vec<S>],
    transfer: &[Vec<S>],
) -> Result<TransferReport> {
    flatten_aligned("transfer_decomposition", &[gold, baseline, transfer])?;
    let mut corrected_tokens = Vec::new();
    let mut falsified_tokens = Vec::new();
    let (mut n, mut base_hits, mut transfer_hits) = (0usize, 0usize, 0usize);
    for (si, ((g, b), t)) in gold.iter().zip(baseline).zip(transfer).enumerate() {
        for (ti, ((g, b), t)) in g.iter().zip(b).zip(t).enumerate() {
            let (g, b, t) = (g.as_ref(), b.as_ref(), t.as_ref());
            n += 1;
            let base_ok = b == g;
            let transfer_ok = t == g;
            base_hits += usize::from(base_ok);
            transfer_hits += usize::from(transfer_ok);
            let changed = ChangedToken {
                sentence: si,
                token: ti,
                gold: g.to_string(),
                baseline: b.to_string(),
                transfer: t.to_string(),
            };
            match (base_ok, transfer_ok) {
                (false, true) => corrected_tokens.push(changed),
                (true, false) => falsified_tokens.push(changed),
                _ => {}
            }
        }
    }
    if n == 0 {
        return Err(Error::EmptyCorpus);
    }
    let total = n as f64;
    let positive_transfer = corrected_tokens.len() as f64 / total;
    let negative_transfer = falsified_tokens.len() as f64 / total;
    Ok(TransferReport {
        tokens: n,
        corrected: corrected_tokens.len(),
        falsified: falsified_tokens.len(),
        positive_transfer,
        negative_transfer,
        gain: positive_transfer - negative_transfer,
        baseline_accuracy: base_hits as f64 / total,
        transfer_accuracy: transfer_hits as f64 / total,
        corrected_tokens,
        falsified_tokens,
    })
}
