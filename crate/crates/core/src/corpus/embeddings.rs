use std::collections::BTreeMap;
use std::fs;
use std::io::{BufRead, BufReader};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::autodiff::Array;
use crate::corpus::Vocabulary;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Word-embedding matrix aligned with a [`Vocabulary`].
#[derive(Clone, Debug)]
pub struct EmbeddingTable<T> {
    pub dim: usize,
    pub matrix: Array<T>,
    pub found: usize,
    pub oov: usize,
}

/// Bound of the OOV initialisation interval, `sqrt(3 / d)`.
pub fn oov_bound(dim: usize) -> f64 {
    (3.0 / dim as f64).sqrt()
}

/// `rows × dim` matrix drawn from uniform(±sqrt(3/dim)).
pub fn random_embeddings<T: Scalar>(rows: usize, dim: usize, rng: &mut impl Rng) -> Array<T> {
    let b = oov_bound(dim);
    let data = (0..rows * dim)
        .map(|_| T::from_f64_lossy(rng.gen_range(-b..=b)))
        .collect();
    Array::from_parts(vec![rows, dim], data)
}

/// Parses `word v1 ... vd` lines. The first occurrence of a lowercased word
/// wins. Returns the vectors keyed by word and the dimension.
pub fn read_vectors(reader: impl BufRead) -> Result<(BTreeMap<String, Vec<f64>>, usize)> {
    let mut vectors = BTreeMap::new();
    let mut dim = None;
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let line = line.trim_end_matches(['\r', '\n']);
        if line.is_empty() {
            continue;
        }
        let mut fields = line.split(' ');
        let word = fields.next().unwrap_or_default();
        let values = fields
            .map(|f| {
                f.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| Error::Format(format!("line {}: bad value {f:?}", i + 1)))
            })
            .collect::<Result<Vec<f64>>>()?;
        if word.is_empty() || values.is_empty() {
            return Err(Error::Format(format!("line {}: expected word and values", i + 1)));
        }
        match dim {
            None => dim = Some(values.len()),
            Some(d) if d != values.len() => {
                return Err(Error::Format(format!(
                    "line {}: dimension {} differs from {d}",
                    i + 1,
                    values.len()
                )))
            }
            _ => {}
        }
        vectors.entry(word.to_lowercase()).or_insert(values);
    }
    let dim = dim.ok_or_else(|| Error::Format("embedding file has no vectors".into()))?;
    Ok((vectors, dim))
}

/// Word vectors read from a text file, not yet aligned with a vocabulary.
#[derive(Clone, Debug, PartialEq)]
pub struct PretrainedVectors {
    pub dim: usize,
    pub vectors: BTreeMap<String, Vec<f64>>,
}

impl PretrainedVectors {
    pub fn from_reader(reader: impl BufRead) -> Result<Self> {
        let (vectors, dim) = read_vectors(reader)?;
        Ok(Self { dim, vectors })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_reader(BufReader::new(fs::File::open(path)?))
    }

    /// Aligns the vectors with `vocab`. Words missing from the file get
    /// seeded uniform(±sqrt(3/d)) rows.
    pub fn table_for<T: Scalar>(
        &self,
        vocab: &Vocabulary,
        expected_dim: usize,
        seed: u64,
    ) -> Result<EmbeddingTable<T>> {
        if self.dim != expected_dim {
            return Err(Error::Config(format!(
                "embedding file has dimension {}, model expects {expected_dim}",
                self.dim
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut matrix = random_embeddings::<T>(vocab.word_count(), self.dim, &mut rng);
        let mut found = 0;
        for (id, word) in vocab.words().iter().enumerate() {
            if let Some(v) = self.vectors.get(word) {
                for (dst, &src) in matrix.row_slice_mut(id).iter_mut().zip(v) {
                    *dst = T::from_f64_lossy(src);
                }
                found += 1;
            }
        }
        Ok(EmbeddingTable {
            dim: self.dim,
            matrix,
            found,
            oov: vocab.word_count() - found,
        })
    }
}

pub fn embeddings_from_reader<T: Scalar>(
    reader: impl BufRead,
    vocab: &Vocabulary,
    expected_dim: usize,
    seed: u64,
) -> Result<EmbeddingTable<T>> {
    PretrainedVectors::from_reader(reader)?.table_for(vocab, expected_dim, seed)
}

pub fn load_embeddings<T: Scalar>(
    path: impl AsRef<Path>,
    vocab: &Vocabulary,
    expected_dim: usize,
    seed: u64,
) -> Result<EmbeddingTable<T>> {
    PretrainedVectors::load(path)?.table_for(vocab, expected_dim, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{build_vocab, parse_conll_str, Split};

    fn vocab() -> Vocabulary {
        build_vocab(&parse_conll_str("run\tVB\nwalk\tVB\n", Split::Train).unwrap(), 1)
    }

    #[test]
    fn found_rows_copy_file() {
        let v = vocab();
        let t: EmbeddingTable<f64> = embeddings_from_reader("run 0.1 0.2\n".as_bytes(), &v, 2, 7).unwrap();
        assert_eq!(t.matrix.row_slice(v.word_id("run")), &[0.1, 0.2]);
        assert_eq!(t.found, 1);
        assert_eq!(t.oov, 3);
    }

    #[test]
    fn oov_rows_within_bound() {
        let v = vocab();
        let t: EmbeddingTable<f64> = embeddings_from_reader("run 0.1 0.2\n".as_bytes(), &v, 2, 7).unwrap();
        let b = (3.0f64 / 2.0).sqrt();
        for &x in t.matrix.row_slice(v.word_id("walk")) {
            assert!(x.abs() <= b);
        }
    }

    #[test]
    fn mixed_dimensions_rejected() {
        let r = embeddings_from_reader::<f64>("a 1 2\nb 1 2 3\n".as_bytes(), &vocab(), 2, 0);
        assert!(matches!(r, Err(Error::Format(_))));
    }

    #[test]
    fn dimension_mismatch_is_config_error() {
        let r = embeddings_from_reader::<f64>("a 1 2\n".as_bytes(), &vocab(), 3, 0);
        assert!(matches!(r, Err(Error::Config(_))));
    }

    #[test]
    fn seeded_oov_rows_reproducible() {
        let v = vocab();
        let a: EmbeddingTable<f64> = embeddings_from_reader("run 1 2\n".as_bytes(), &v, 2, 3).unwrap();
        let b: EmbeddingTable<f64> = embeddings_from_reader("run 1 2\n".as_bytes(), &v, 2, 3).unwrap();
        assert_eq!(a.matrix, b.matrix);
    }
}
