//! The [`Tensor`] handle and the reverse-mode pass.
//!
//! Every op allocates a fresh node holding its output and, when any input
//! requires a gradient, a record of the op plus handles to its inputs. Node
//! ids grow monotonically, so a child always carries a larger id than each of
//! its parents; sorting the ancestor set by descending id yields a valid
//! reverse topological order without a separate DFS.

use std::cell::{Cell, Ref, RefCell};
use std::collections::HashMap;
use std::fmt;
use std::rc::Rc;

use crate::error::{Result, TensorError};
use crate::ops::Op;
use crate::shape::numel;

thread_local! {
    static NEXT_ID: Cell<u64> = const { Cell::new(0) };
}

fn next_id() -> u64 {
    NEXT_ID.with(|c| {
        let id = c.get();
        c.set(id + 1);
        id
    })
}

pub(crate) struct Node {
    pub(crate) id: u64,
    pub(crate) shape: Vec<usize>,
    pub(crate) data: Vec<f64>,
    pub(crate) requires_grad: bool,
    pub(crate) grad: RefCell<Option<Vec<f64>>>,
    pub(crate) op: Op,
    pub(crate) parents: Vec<Tensor>,
}

/// Dense row-major `f64` array participating in reverse-mode differentiation.
///
/// Cloning is cheap (reference counted); the data is immutable once built.
#[derive(Clone)]
pub struct Tensor {
    pub(crate) node: Rc<Node>,
}

impl fmt::Debug for Tensor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Tensor")
            .field("shape", &self.node.shape)
            .field("requires_grad", &self.node.requires_grad)
            .finish()
    }
}

impl Tensor {
    fn leaf(shape: Vec<usize>, data: Vec<f64>, requires_grad: bool) -> Result<Self> {
        if numel(&shape) != data.len() {
            return Err(TensorError::DataLength {
                shape,
                len: data.len(),
            });
        }
        Ok(Self::raw(shape, data, requires_grad, Op::Leaf, Vec::new()))
    }

    pub(crate) fn raw(
        shape: Vec<usize>,
        data: Vec<f64>,
        requires_grad: bool,
        op: Op,
        parents: Vec<Tensor>,
    ) -> Self {
        debug_assert_eq!(numel(&shape), data.len());
        Tensor {
            node: Rc::new(Node {
                id: next_id(),
                shape,
                data,
                requires_grad,
                grad: RefCell::new(None),
                op,
                parents,
            }),
        }
    }

    /// Records `op` only when some parent needs a gradient.
    pub(crate) fn from_op(shape: Vec<usize>, data: Vec<f64>, op: Op, parents: Vec<Tensor>) -> Self {
        if parents.iter().any(Tensor::requires_grad) {
            Self::raw(shape, data, true, op, parents)
        } else {
            Self::raw(shape, data, false, Op::Leaf, Vec::new())
        }
    }

    /// A constant (no gradient) tensor.
    pub fn new(shape: impl Into<Vec<usize>>, data: Vec<f64>) -> Result<Self> {
        Self::leaf(shape.into(), data, false)
    }

    /// A trainable leaf whose gradient is populated by [`Tensor::backward`].
    pub fn param(shape: impl Into<Vec<usize>>, data: Vec<f64>) -> Result<Self> {
        Self::leaf(shape.into(), data, true)
    }

    pub fn scalar(value: f64) -> Self {
        Self::raw(Vec::new(), vec![value], false, Op::Leaf, Vec::new())
    }

    pub fn zeros(shape: impl Into<Vec<usize>>) -> Self {
        let shape = shape.into();
        let n = numel(&shape);
        Self::raw(shape, vec![0.0; n], false, Op::Leaf, Vec::new())
    }

    pub fn full(shape: impl Into<Vec<usize>>, value: f64) -> Self {
        let shape = shape.into();
        let n = numel(&shape);
        Self::raw(shape, vec![value; n], false, Op::Leaf, Vec::new())
    }

    pub fn shape(&self) -> &[usize] {
        &self.node.shape
    }

    pub fn rank(&self) -> usize {
        self.node.shape.len()
    }

    pub fn numel(&self) -> usize {
        self.node.data.len()
    }

    pub fn data(&self) -> &[f64] {
        &self.node.data
    }

    pub fn to_vec(&self) -> Vec<f64> {
        self.node.data.clone()
    }

    /// Value of a single-element tensor.
    pub fn item(&self) -> f64 {
        assert_eq!(self.numel(), 1, "item() on tensor of shape {:?}", self.shape());
        self.node.data[0]
    }

    pub fn requires_grad(&self) -> bool {
        self.node.requires_grad
    }

    /// Gradient written by the last [`Tensor::backward`] that reached this node.
    pub fn grad(&self) -> Option<Vec<f64>> {
        self.node.grad.borrow().clone()
    }

    pub fn grad_ref(&self) -> Ref<'_, Option<Vec<f64>>> {
        self.node.grad.borrow()
    }

    /// Same values, cut from the recorded graph.
    pub fn detach(&self) -> Tensor {
        Self::raw(
            self.node.shape.clone(),
            self.node.data.clone(),
            false,
            Op::Leaf,
            Vec::new(),
        )
    }

    pub fn id(&self) -> u64 {
        self.node.id
    }

    /// Populates `grad` on every ancestor that requires one with
    /// d(self)/d(ancestor). Grads from an earlier pass are overwritten;
    /// tensors outside the ancestor set are left untouched.
    pub fn backward(&self) -> Result<()> {
        if self.numel() != 1 {
            return Err(TensorError::NonScalarRoot(self.shape().to_vec()));
        }
        if !self.requires_grad() {
            return Ok(());
        }

        let mut order: Vec<Tensor> = Vec::new();
        let mut seen: HashMap<u64, ()> = HashMap::new();
        let mut stack = vec![self.clone()];
        while let Some(t) = stack.pop() {
            if !t.requires_grad() || seen.insert(t.id(), ()).is_some() {
                continue;
            }
            for p in &t.node.parents {
                if p.id() >= t.id() {
                    return Err(TensorError::Cycle);
                }
                stack.push(p.clone());
            }
            order.push(t);
        }
        order.sort_unstable_by(|a, b| b.id().cmp(&a.id()));

        let mut pending: HashMap<u64, Vec<f64>> = HashMap::with_capacity(order.len());
        pending.insert(self.id(), vec![1.0]);
        for t in &order {
            let Some(g) = pending.remove(&t.id()) else {
                continue;
            };
            if !t.node.parents.is_empty() {
                let parent_grads = t.node.op.backward(&t.node, &g);
                for (p, pg) in t.node.parents.iter().zip(parent_grads) {
                    let Some(pg) = pg else { continue };
                    if !p.requires_grad() {
                        continue;
                    }
                    match pending.get_mut(&p.id()) {
                        Some(acc) => acc.iter_mut().zip(&pg).for_each(|(a, b)| *a += b),
                        None => {
                            pending.insert(p.id(), pg);
                        }
                    }
                }
            }
            *t.node.grad.borrow_mut() = Some(g);
        }
        Ok(())
    }
}
