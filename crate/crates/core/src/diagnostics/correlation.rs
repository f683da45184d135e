use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ActivationRecord;
use crate::scalar::Scalar;

const ZERO_STD: f64 = 1e-12;

/// Unit-by-unit Pearson correlations between two activation records.
///
/// Entry `(j, t)` correlates unit `j` of the *after* record with unit `t` of
/// the *before* record, so the matrix is not symmetric. The diagonal is the
/// per-unit charge.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrelationMatrix {
    pub units: usize,
    /// Row-major `units × units`.
    pub values: Vec<f64>,
    /// Units of the after record with zero variance (their rows are 0).
    pub constant_after: Vec<usize>,
    /// Units of the before record with zero variance (their columns are 0).
    pub constant_before: Vec<usize>,
}

impl CorrelationMatrix {
    pub fn get(&self, after_unit: usize, before_unit: usize) -> f64 {
        self.values[after_unit * self.units + before_unit]
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.units).map(|j| self.get(j, j)).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for j in 0..self.units {
            let row: Vec<String> = (0..self.units).map(|t| self.get(j, t).to_string()).collect();
            let _ = writeln!(out, "{}", row.join(","));
        }
        out
    }
}

/// Column means and population standard deviations.
fn standardize<T: Scalar>(rec: &ActivationRecord<T>) -> (Vec<f64>, Vec<usize>) {
    let (n, h) = (rec.tokens(), rec.hidden());
    let mut mean = vec![0.0; h];
    for r in 0..n {
        for (m, v) in mean.iter_mut().zip(rec.h.row_slice(r)) {
            *m += v.to_f64_lossy();
        }
    }
    for m in &mut mean {
        *m /= n as f64;
    }
    let mut var = vec![0.0; h];
    for r in 0..n {
        for ((s, v), m) in var.iter_mut().zip(rec.h.row_slice(r)).zip(&mean) {
            let d = v.to_f64_lossy() - m;
            *s += d * d;
        }
    }
    let std: Vec<f64> = var.iter().map(|s| (s / n as f64).sqrt()).collect();
    let constant = (0..h).filter(|&j| std[j] < ZERO_STD).collect();
    let mut z = vec![0.0; n * h];
    for r in 0..n {
        for (j, v) in rec.h.row_slice(r).iter().enumerate() {
            if std[j] >= ZERO_STD {
                z[r * h + j] = (v.to_f64_lossy() - mean[j]) / std[j];
            }
        }
    }
    (z, constant)
}

pub fn correlation_matrix<T: Scalar>(
    before: &ActivationRecord<T>,
    after: &ActivationRecord<T>,
) -> Result<CorrelationMatrix> {
    if before.tokens() != after.tokens() || before.hidden() != after.hidden() {
        return Err(Error::shape("correlation_matrix", before.h.shape(), after.h.shape()));
    }
    let (n, h) = (after.tokens(), after.hidden());
    let (za, constant_after) = standardize(after);
    let (zb, constant_before) = standardize(before);
    let mut values = vec![0.0; h * h];
    for r in 0..n {
        let ra = &za[r * h..(r + 1) * h];
        let rb = &zb[r * h..(r + 1) * h];
        for (j, &a) in ra.iter().enumerate() {
            if a == 0.0 {
                continue;
            }
            for (v, &b) in values[j * h..(j + 1) * h].iter_mut().zip(rb) {
                *v += a * b;
            }
        }
    }
    for v in &mut values {
        *v /= n as f64;
    }
    Ok(CorrelationMatrix {
        units: h,
        values,
        constant_after,
        constant_before,
    })
}
