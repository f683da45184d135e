//! Evaluation metrics and transfer diagnostics.

mod anrg;
mod correlation;
mod histogram;
pub(crate) mod metrics;
mod perclass;
mod spans;
mod topk;
mod transfer;

pub use anrg::{anrg, ScoreTable};
pub use correlation::{correlation_matrix, CorrelationMatrix};
pub use histogram::{histogram_with_edges, symmetric_edges, weight_histogram, Histogram, WeightHistograms};
pub use metrics::{evaluate, token_accuracy, EvalResult};
pub use perclass::{per_class_delta, ClassDelta, PerClassDelta};
pub use spans::{extract_spans, is_bio_tagset, parse_bio, span_f1, span_f1_corpus, Bio, Span, SpanScore};
pub use topk::{topk_stimulus, topk_to_tsv, Stimulus, UnitTopK};
pub use transfer::{transfer_decomposition, ChangedToken, TransferReport};
