use crate::autodiff::{Array, GradStore, ParamId, ParamStore};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Classical (heavy-ball) SGD with momentum:
/// `v <- momentum * v + g`, `w <- w - lr * v`.
#[derive(Clone, Debug)]
pub struct Sgd<T> {
    learning_rate: T,
    momentum: T,
    velocity: Vec<Array<T>>,
}

impl<T: Scalar> Sgd<T> {
    pub fn new(learning_rate: T, momentum: T) -> Result<Self> {
        if !(learning_rate > T::zero()) {
            return Err(Error::Config("learning rate must be positive".into()));
        }
        if momentum < T::zero() || momentum >= T::one() {
            return Err(Error::Config("momentum must lie in [0, 1)".into()));
        }
        Ok(Self {
            learning_rate,
            momentum,
            velocity: Vec::new(),
        })
    }

    /// Allocates one zero velocity buffer per parameter of `params`.
    pub fn register(&mut self, params: &ParamStore<T>) {
        self.velocity = params.iter().map(|(_, _, v)| Array::zeros(v.shape())).collect();
    }

    pub fn learning_rate(&self) -> T {
        self.learning_rate
    }

    pub fn velocity(&self, id: ParamId) -> Option<&Array<T>> {
        self.velocity.get(id.index())
    }

    /// Updates every parameter accepted by `trainable`. Rejected parameters
    /// and their velocities are left untouched.
    pub fn step(
        &mut self,
        params: &mut ParamStore<T>,
        grads: &GradStore<T>,
        trainable: impl Fn(ParamId) -> bool,
    ) -> Result<()> {
        if grads.len() != params.len() {
            return Err(Error::State(format!(
                "{} gradients for {} parameters",
                grads.len(),
                params.len()
            )));
        }
        let ids: Vec<ParamId> = params.ids().collect();
        for id in ids {
            if !trainable(id) {
                continue;
            }
            let v = self.velocity.get_mut(id.index()).ok_or_else(|| {
                Error::State(format!("parameter {} not registered", params.name(id)))
            })?;
            let g = grads.get(id);
            let w = params.get_mut(id);
            if v.shape() != g.shape() || w.shape() != g.shape() {
                return Err(Error::State(format!(
                    "velocity shape {:?} does not match parameter {:?}",
                    v.shape(),
                    w.shape()
                )));
            }
            for ((vi, &gi), wi) in v.data_mut().iter_mut().zip(g.data()).zip(w.data_mut()) {
                *vi = self.momentum * *vi + gi;
                *wi -= self.learning_rate * *vi;
            }
        }
        Ok(())
    }
}
