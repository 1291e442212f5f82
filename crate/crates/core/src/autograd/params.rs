use rand::Rng;

use super::graph::{Graph, Value};
use super::tensor::Tensor;
use super::{AutogradError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ParamId(usize);

impl ParamId {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Parameter {
    pub name: String,
    pub value: Tensor,
    pub trainable: bool,
}

/// Owns every learnable tensor of a model together with its gradient
/// accumulator.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamStore {
    params: Vec<Parameter>,
    grads: Vec<Vec<f64>>,
    grads_ready: bool,
}

impl Default for ParamStore {
    fn default() -> Self {
        Self::new()
    }
}

impl ParamStore {
    pub fn new() -> Self {
        Self {
            params: Vec::new(),
            grads: Vec::new(),
            grads_ready: false,
        }
    }

    pub fn add(&mut self, name: impl Into<String>, value: Tensor, trainable: bool) -> ParamId {
        self.grads.push(vec![0.0; value.len()]);
        self.params.push(Parameter {
            name: name.into(),
            value,
            trainable,
        });
        ParamId(self.params.len() - 1)
    }

    /// Uniform(−a, a) initialised tensor.
    pub fn add_uniform<R: Rng>(
        &mut self,
        name: impl Into<String>,
        shape: &[usize],
        a: f64,
        rng: &mut R,
    ) -> ParamId {
        let n = shape.iter().product();
        let data = (0..n).map(|_| rng.random_range(-a..a)).collect();
        self.add(name, Tensor::new(shape.to_vec(), data), true)
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn get(&self, id: ParamId) -> &Parameter {
        &self.params[id.0]
    }

    pub fn value(&self, id: ParamId) -> &Tensor {
        &self.params[id.0].value
    }

    pub fn value_mut(&mut self, id: ParamId) -> &mut Tensor {
        &mut self.params[id.0].value
    }

    pub fn params(&self) -> &[Parameter] {
        &self.params
    }

    pub fn ids(&self) -> impl Iterator<Item = ParamId> {
        (0..self.params.len()).map(ParamId)
    }

    pub fn find(&self, name: &str) -> Option<ParamId> {
        self.params.iter().position(|p| p.name == name).map(ParamId)
    }

    pub fn set_trainable(&mut self, id: ParamId, trainable: bool) {
        self.params[id.0].trainable = trainable;
    }

    pub fn n_scalars(&self) -> usize {
        self.params.iter().map(|p| p.value.len()).sum()
    }

    /// Registers every parameter as a borrowed leaf; trainable ones receive
    /// gradients.
    pub fn bind<'a>(&'a self, graph: &mut Graph<'a>) -> Bound {
        Bound(
            self.params
                .iter()
                .map(|p| graph.leaf_ref(&p.value, p.trainable))
                .collect(),
        )
    }

    /// Reads the leaf gradients of a finished backward pass.
    pub fn collect_grads(&self, graph: &Graph<'_>, bound: &Bound) -> Gradients {
        Gradients(
            self.params
                .iter()
                .zip(&bound.0)
                .map(|(p, &v)| match graph.grad_slice(v) {
                    Some(g) => g.to_vec(),
                    None => vec![0.0; p.value.len()],
                })
                .collect(),
        )
    }

    pub fn set_grads(&mut self, grads: Gradients) -> Result<()> {
        if grads.0.len() != self.params.len()
            || grads.0.iter().zip(&self.params).any(|(g, p)| g.len() != p.value.len())
        {
            return Err(AutogradError::GradientLayout);
        }
        self.grads = grads.0;
        self.grads_ready = true;
        Ok(())
    }

    pub fn grad(&self, id: ParamId) -> &[f64] {
        &self.grads[id.0]
    }

    pub fn grads_ready(&self) -> bool {
        self.grads_ready
    }

    pub fn zero_grads(&mut self) {
        self.grads.iter_mut().for_each(|g| g.fill(0.0));
        self.grads_ready = false;
    }

    pub(crate) fn grads_and_params_mut(&mut self) -> (&[Vec<f64>], &mut [Parameter]) {
        (&self.grads, &mut self.params)
    }

    /// Plain-data snapshot of all values, in registration order.
    pub fn snapshot(&self) -> Vec<(String, Tensor)> {
        self.params
            .iter()
            .map(|p| (p.name.clone(), p.value.clone()))
            .collect()
    }

    /// Overwrites values by name; every parameter must be present with a
    /// matching shape.
    pub fn load_snapshot(&mut self, tensors: &[(String, Tensor)]) -> Result<()> {
        for p in &mut self.params {
            let (_, t) = tensors
                .iter()
                .find(|(n, _)| *n == p.name)
                .ok_or_else(|| AutogradError::MissingTensor(p.name.clone()))?;
            if t.shape() != p.value.shape() {
                return Err(AutogradError::ShapeMismatch {
                    op: "load_snapshot",
                    left: p.value.shape().to_vec(),
                    right: t.shape().to_vec(),
                });
            }
            p.value = t.clone();
        }
        Ok(())
    }
}

/// Graph handles of a bound [`ParamStore`].
#[derive(Debug, Clone)]
pub struct Bound(Vec<Value>);

impl Bound {
    pub fn get(&self, id: ParamId) -> Value {
        self.0[id.0]
    }
}

/// Per-parameter gradient buffers, aligned with a [`ParamStore`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients(pub Vec<Vec<f64>>);

impl Gradients {
    pub fn zeros_like(store: &ParamStore) -> Self {
        Gradients(store.params.iter().map(|p| vec![0.0; p.value.len()]).collect())
    }

    pub fn add_assign(&mut self, other: &Gradients) {
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
        }
    }

    pub fn scale(&mut self, c: f64) {
        self.0
            .iter_mut()
            .for_each(|g| g.iter_mut().for_each(|x| *x *= c));
    }

    pub fn all_finite(&self) -> bool {
        self.0.iter().flatten().all(|x| x.is_finite())
    }
}
