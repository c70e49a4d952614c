use thiserror::Error;

use crate::graph::{AtomType, BondType, MolGraph, MAX_ATOMS};

pub const N_MAX: usize = MAX_ATOMS;
/// C, N, O, F and the padding class.
pub const NODE_CLASSES: usize = 5;
pub const PAD: usize = 4;
/// none, single, double, triple.
pub const EDGE_CLASSES: usize = 4;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DenseError {
    #[error("expected {expected} values in {what}, got {got}")]
    Length { what: &'static str, expected: usize, got: usize },
    #[error("row {0} of X is not one-hot")]
    NodeNotOneHot(usize),
    #[error("A[{0}][{1}] is not one-hot")]
    EdgeNotOneHot(usize, usize),
    #[error("A is not symmetric at ({0}, {1})")]
    Asymmetric(usize, usize),
    #[error("A[{0}][{0}] must be none")]
    SelfLoop(usize),
    #[error("bond touches padding node {0}")]
    PadBond(usize),
}

/// Fixed-width one-hot encoding: `x` is `[9, 5]`, `a` is `[9, 9, 4]`, both
/// row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseGraph {
    pub x: Vec<f64>,
    pub a: Vec<f64>,
    pub n_real: usize,
}

impl DenseGraph {
    /// Builds and validates from flat buffers.
    pub fn from_parts(x: Vec<f64>, a: Vec<f64>) -> Result<Self, DenseError> {
        if x.len() != N_MAX * NODE_CLASSES {
            return Err(DenseError::Length { what: "X", expected: N_MAX * NODE_CLASSES, got: x.len() });
        }
        if a.len() != N_MAX * N_MAX * EDGE_CLASSES {
            return Err(DenseError::Length { what: "A", expected: N_MAX * N_MAX * EDGE_CLASSES, got: a.len() });
        }
        let mut d = DenseGraph { x, a, n_real: 0 };
        d.validate()?;
        d.n_real = d.node_classes().iter().filter(|&&c| c != PAD).count();
        Ok(d)
    }

    fn validate(&self) -> Result<(), DenseError> {
        let one_hot = |s: &[f64]| s.iter().all(|&v| v == 0.0 || v == 1.0) && s.iter().sum::<f64>() == 1.0;
        for i in 0..N_MAX {
            if !one_hot(&self.x[i * NODE_CLASSES..(i + 1) * NODE_CLASSES]) {
                return Err(DenseError::NodeNotOneHot(i));
            }
        }
        let nodes = self.node_classes();
        for i in 0..N_MAX {
            for j in 0..N_MAX {
                let o = (i * N_MAX + j) * EDGE_CLASSES;
                if !one_hot(&self.a[o..o + EDGE_CLASSES]) {
                    return Err(DenseError::EdgeNotOneHot(i, j));
                }
            }
        }
        for i in 0..N_MAX {
            if self.edge_class(i, i) != 0 {
                return Err(DenseError::SelfLoop(i));
            }
            for j in 0..N_MAX {
                if self.edge_class(i, j) != self.edge_class(j, i) {
                    return Err(DenseError::Asymmetric(i, j));
                }
                if self.edge_class(i, j) != 0 && (nodes[i] == PAD || nodes[j] == PAD) {
                    return Err(DenseError::PadBond(if nodes[i] == PAD { i } else { j }));
                }
            }
        }
        Ok(())
    }

    /// Argmax class of every node row.
    pub fn node_classes(&self) -> [usize; N_MAX] {
        let mut out = [PAD; N_MAX];
        for (i, o) in out.iter_mut().enumerate() {
            *o = argmax(&self.x[i * NODE_CLASSES..(i + 1) * NODE_CLASSES]);
        }
        out
    }

    pub fn edge_class(&self, i: usize, j: usize) -> usize {
        let o = (i * N_MAX + j) * EDGE_CLASSES;
        argmax(&self.a[o..o + EDGE_CLASSES])
    }
}

fn argmax(s: &[f64]) -> usize {
    let mut best = 0;
    for (k, &v) in s.iter().enumerate() {
        if v > s[best] {
            best = k;
        }
    }
    best
}

/// Dense encoding with atoms in their graph order and padding after.
pub fn to_dense(g: &MolGraph) -> DenseGraph {
    let mut x = vec![0.0; N_MAX * NODE_CLASSES];
    let mut a = vec![0.0; N_MAX * N_MAX * EDGE_CLASSES];
    for i in 0..N_MAX {
        let c = g.atoms().get(i).map_or(PAD, |t| t.index());
        x[i * NODE_CLASSES + c] = 1.0;
    }
    let m = g.order_matrix();
    for i in 0..N_MAX {
        for j in 0..N_MAX {
            a[(i * N_MAX + j) * EDGE_CLASSES + usize::from(m[i][j])] = 1.0;
        }
    }
    DenseGraph { x, a, n_real: g.num_atoms() }
}

/// Inverse of [`to_dense`]. Real atoms keep their relative order; padding
/// rows may sit anywhere and are dropped.
pub fn from_dense(d: &DenseGraph) -> Result<MolGraph, DenseError> {
    d.validate()?;
    let classes = d.node_classes();
    let real: Vec<usize> = (0..N_MAX).filter(|&i| classes[i] != PAD).collect();
    let atoms = real
        .iter()
        .map(|&i| AtomType::from_index(classes[i]).expect("non-pad class"))
        .collect();
    let mut bonds = Vec::new();
    for (p, &i) in real.iter().enumerate() {
        for (q, &j) in real.iter().enumerate().skip(p + 1) {
            if let Some(b) = BondType::from_order(d.edge_class(i, j) as u8) {
                bonds.push((p, q, b));
            }
        }
    }
    Ok(MolGraph::new(atoms, bonds).expect("validated dense graph"))
}
