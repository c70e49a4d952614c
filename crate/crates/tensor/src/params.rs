//! Named parameter storage and per-step binding to autodiff leaves.

use crate::error::{Result, TensorError};
use crate::optim::{adam_step, AdamState};
use crate::shape::numel;
use crate::tensor::Tensor;

#[derive(Clone, Debug, PartialEq)]
pub struct Param {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ParamId(pub usize);

/// Ordered collection of named parameters owned outside any autodiff graph.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ParamStore {
    params: Vec<Param>,
}

impl ParamStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, name: impl Into<String>, shape: impl Into<Vec<usize>>, data: Vec<f64>) -> Result<ParamId> {
        let name = name.into();
        let shape = shape.into();
        if numel(&shape) != data.len() {
            return Err(TensorError::DataLength { shape, len: data.len() });
        }
        if self.find(&name).is_some() {
            return Err(TensorError::Invalid(format!("duplicate parameter name `{name}`")));
        }
        self.params.push(Param { name, shape, data });
        Ok(ParamId(self.params.len() - 1))
    }

    pub fn find(&self, name: &str) -> Option<ParamId> {
        self.params.iter().position(|p| p.name == name).map(ParamId)
    }

    pub fn get(&self, id: ParamId) -> &Param {
        &self.params[id.0]
    }

    pub fn get_mut(&mut self, id: ParamId) -> &mut Param {
        &mut self.params[id.0]
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (ParamId, &Param)> {
        self.params.iter().enumerate().map(|(i, p)| (ParamId(i), p))
    }

    pub fn ids_with_prefix(&self, prefix: &str) -> Vec<ParamId> {
        self.iter()
            .filter(|(_, p)| p.name.starts_with(prefix))
            .map(|(id, _)| id)
            .collect()
    }

    /// Fresh leaf tensors for one forward pass; `trainable` decides which
    /// of them record gradients.
    pub fn bind(&self, trainable: impl Fn(&Param) -> bool) -> Bound {
        let tensors = self
            .params
            .iter()
            .map(|p| {
                if trainable(p) {
                    Tensor::param(p.shape.clone(), p.data.clone())
                } else {
                    Tensor::new(p.shape.clone(), p.data.clone())
                }
                .expect("store keeps shapes consistent")
            })
            .collect();
        Bound { tensors }
    }

    /// Applies one Adam update to `ids`; a missing gradient counts as zero.
    pub fn apply_adam(&mut self, ids: &[ParamId], grads: &[Option<Vec<f64>>], state: &mut AdamState) -> Result<()> {
        let names: Vec<String> = ids.iter().map(|&id| self.get(id).name.clone()).collect();
        let zeros: Vec<Vec<f64>> = ids.iter().map(|&id| vec![0.0; self.get(id).data.len()]).collect();
        let grad_refs: Vec<&[f64]> = grads
            .iter()
            .zip(&zeros)
            .map(|(g, z)| g.as_deref().unwrap_or(z))
            .collect();
        let mut order: Vec<(usize, ParamId)> = ids.iter().copied().enumerate().collect();
        order.sort_by_key(|&(_, id)| id);
        if order.windows(2).any(|w| w[0].1 == w[1].1) {
            return Err(TensorError::Invalid("parameter listed twice in one update".into()));
        }
        // Split the store into disjoint mutable borrows in the caller's order.
        let mut slots: Vec<Option<&mut [f64]>> = (0..ids.len()).map(|_| None).collect();
        let mut rest: &mut [Param] = &mut self.params;
        let mut consumed = 0usize;
        for (pos, id) in order {
            let (_, tail) = rest.split_at_mut(id.0 - consumed);
            let (head, tail) = tail.split_at_mut(1);
            slots[pos] = Some(&mut head[0].data);
            rest = tail;
            consumed = id.0 + 1;
        }
        let mut params: Vec<&mut [f64]> = slots.into_iter().map(|s| s.unwrap()).collect();
        let name_refs: Vec<&str> = names.iter().map(String::as_str).collect();
        adam_step(&mut params, &grad_refs, &name_refs, state)
    }
}

/// Tensors bound from a [`ParamStore`], indexed by [`ParamId`].
pub struct Bound {
    tensors: Vec<Tensor>,
}

impl Bound {
    /// Binds tensors positionally, `tensors[k]` standing for `ParamId(k)`.
    pub fn from_tensors(tensors: Vec<Tensor>) -> Bound {
        Bound { tensors }
    }

    pub fn get(&self, id: ParamId) -> &Tensor {
        &self.tensors[id.0]
    }

    pub fn grads(&self, ids: &[ParamId]) -> Vec<Option<Vec<f64>>> {
        ids.iter().map(|&id| self.tensors[id.0].grad()).collect()
    }
}

impl std::ops::Index<ParamId> for Bound {
    type Output = Tensor;

    fn index(&self, id: ParamId) -> &Tensor {
        &self.tensors[id.0]
    }
}
