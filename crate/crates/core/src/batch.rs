//! Dense mini-batch tensors built from molecules.

use molgen_chem::dense::{NODE_CLASSES, N_MAX, PAD};
use molgen_chem::{to_dense, MolGraph, Standardizer};
use molgen_tensor::{Result, Tensor, TensorError};

/// Number of upper-triangle edge slots for nine nodes.
pub const N_SLOTS: usize = N_MAX * (N_MAX - 1) / 2;

/// Edge slots `(i, j)`, `i < j`, in lexicographic order.
pub fn slots() -> [(usize, usize); N_SLOTS] {
    let mut out = [(0, 0); N_SLOTS];
    let mut k = 0;
    for i in 0..N_MAX {
        for j in i + 1..N_MAX {
            out[k] = (i, j);
            k += 1;
        }
    }
    out
}

pub struct GraphBatch {
    pub size: usize,
    /// One-hot node classes, `[B, 9, 5]`.
    pub x: Tensor,
    /// Bond-order weighted adjacency, `[B, 9, 9]`.
    pub adj: Tensor,
    /// 1 for real atoms, 0 for padding, `[B, 9, 1]`.
    pub mask: Tensor,
    pub node_targets: Vec<usize>,
    /// Bond class per slot, `B * 36`.
    pub edge_targets: Vec<usize>,
    /// Standardized labels `[B, P]`, when requested.
    pub properties: Option<Tensor>,
}

impl GraphBatch {
    pub fn new(graphs: &[&MolGraph], standardizer: Option<&Standardizer>) -> Result<GraphBatch> {
        let b = graphs.len();
        let mut x = Vec::with_capacity(b * N_MAX * NODE_CLASSES);
        let mut adj = vec![0.0; b * N_MAX * N_MAX];
        let mut mask = vec![0.0; b * N_MAX];
        let mut node_targets = Vec::with_capacity(b * N_MAX);
        let mut edge_targets = Vec::with_capacity(b * N_SLOTS);
        let slot_list = slots();
        for (g_idx, g) in graphs.iter().enumerate() {
            let d = to_dense(g);
            x.extend_from_slice(&d.x);
            let classes = d.node_classes();
            node_targets.extend_from_slice(&classes);
            for i in 0..N_MAX {
                mask[g_idx * N_MAX + i] = if classes[i] == PAD { 0.0 } else { 1.0 };
                for j in 0..N_MAX {
                    adj[(g_idx * N_MAX + i) * N_MAX + j] = d.edge_class(i, j) as f64;
                }
            }
            edge_targets.extend(slot_list.iter().map(|&(i, j)| d.edge_class(i, j)));
        }
        let properties = match standardizer {
            Some(s) => {
                let mut data = Vec::with_capacity(b * s.names.len());
                for (g_idx, g) in graphs.iter().enumerate() {
                    for (k, name) in s.names.iter().enumerate() {
                        let v = g.property(name).ok_or_else(|| {
                            TensorError::Invalid(format!(
                                "molecule {g_idx} of the batch ({}) has no `{name}` label",
                                molgen_chem::write_smiles_lossy(g)
                            ))
                        })?;
                        data.push(s.apply(k, v));
                    }
                }
                Some(Tensor::new([b, s.names.len()], data)?)
            }
            None => None,
        };
        Ok(GraphBatch {
            size: b,
            x: Tensor::new([b, N_MAX, NODE_CLASSES], x)?,
            adj: Tensor::new([b, N_MAX, N_MAX], adj)?,
            mask: Tensor::new([b, N_MAX, 1], mask)?,
            node_targets,
            edge_targets,
            properties,
        })
    }

    /// Atom classes as committed types for valence budgeting.
    pub fn node_classes(&self, g: usize) -> &[usize] {
        &self.node_targets[g * N_MAX..(g + 1) * N_MAX]
    }

    pub fn edge_tokens(&self, g: usize) -> &[usize] {
        &self.edge_targets[g * N_SLOTS..(g + 1) * N_SLOTS]
    }
}
