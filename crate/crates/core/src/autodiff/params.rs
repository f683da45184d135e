use std::collections::BTreeMap;

use crate::autodiff::Array;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Handle to a parameter registered in a [`ParamStore`].
#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ParamId(pub(crate) usize);

impl ParamId {
    pub fn index(self) -> usize {
        self.0
    }
}

/// Named trainable arrays. Ids are dense and assigned in insertion order.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ParamStore<T> {
    names: Vec<String>,
    values: Vec<Array<T>>,
    by_name: BTreeMap<String, ParamId>,
}

impl<T: Scalar> ParamStore<T> {
    pub fn new() -> Self {
        Self {
            names: Vec::new(),
            values: Vec::new(),
            by_name: BTreeMap::new(),
        }
    }

    pub fn insert(&mut self, name: impl Into<String>, value: Array<T>) -> Result<ParamId> {
        let name = name.into();
        if self.by_name.contains_key(&name) {
            return Err(Error::Config(format!("duplicate parameter {name}")));
        }
        let id = ParamId(self.values.len());
        self.by_name.insert(name.clone(), id);
        self.names.push(name);
        self.values.push(value);
        Ok(id)
    }

    pub fn id(&self, name: &str) -> Option<ParamId> {
        self.by_name.get(name).copied()
    }

    pub fn name(&self, id: ParamId) -> &str {
        &self.names[id.0]
    }

    pub fn get(&self, id: ParamId) -> &Array<T> {
        &self.values[id.0]
    }

    pub fn get_mut(&mut self, id: ParamId) -> &mut Array<T> {
        &mut self.values[id.0]
    }

    pub fn by_name(&self, name: &str) -> Option<&Array<T>> {
        self.id(name).map(|id| self.get(id))
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = ParamId> {
        (0..self.values.len()).map(ParamId)
    }

    pub fn iter(&self) -> impl Iterator<Item = (ParamId, &str, &Array<T>)> {
        self.names
            .iter()
            .zip(&self.values)
            .enumerate()
            .map(|(i, (n, v))| (ParamId(i), n.as_str(), v))
    }

    pub fn total_len(&self) -> usize {
        self.values.iter().map(Array::len).sum()
    }
}

/// Gradient accumulators, shape-matched to a [`ParamStore`].
#[derive(Clone, Debug, PartialEq)]
pub struct GradStore<T> {
    grads: Vec<Array<T>>,
}

impl<T: Scalar> GradStore<T> {
    pub fn zeros_like(params: &ParamStore<T>) -> Self {
        Self {
            grads: params.values.iter().map(|v| Array::zeros(v.shape())).collect(),
        }
    }

    pub fn empty() -> Self {
        Self { grads: Vec::new() }
    }

    pub fn get(&self, id: ParamId) -> &Array<T> {
        &self.grads[id.0]
    }

    pub(crate) fn slot(&mut self, id: ParamId) -> Result<&mut Array<T>> {
        let len = self.grads.len();
        self.grads
            .get_mut(id.0)
            .ok_or(Error::Index { index: id.0, len })
    }

    pub fn len(&self) -> usize {
        self.grads.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grads.is_empty()
    }

    pub fn zero(&mut self) {
        for g in &mut self.grads {
            g.fill(T::zero());
        }
    }

    pub fn scale(&mut self, factor: T) {
        for g in &mut self.grads {
            g.scale_in_place(factor);
        }
    }
}
