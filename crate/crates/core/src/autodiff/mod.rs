//! Reverse-mode differentiation over dense arrays and the SGD optimizer.

mod array;
mod graph;
mod optim;
mod params;

pub use array::{argmax, l2_normalize, Array, ArrayRecord};
pub(crate) use graph::softmax;
pub use graph::{Graph, PrimitiveKind, Var};
pub use optim::Sgd;
pub use params::{GradStore, ParamId, ParamStore};
