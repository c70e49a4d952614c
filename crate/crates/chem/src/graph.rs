use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

/// Largest number of heavy atoms a graph may hold.
pub const MAX_ATOMS: usize = 9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AtomType {
    C,
    N,
    O,
    F,
}

impl AtomType {
    pub const ALL: [AtomType; 4] = [AtomType::C, AtomType::N, AtomType::O, AtomType::F];

    /// Maximum total bond order, with implicit hydrogens filling the rest.
    pub fn valence(self) -> u8 {
        match self {
            AtomType::C => 4,
            AtomType::N => 3,
            AtomType::O => 2,
            AtomType::F => 1,
        }
    }

    pub fn symbol(self) -> char {
        match self {
            AtomType::C => 'C',
            AtomType::N => 'N',
            AtomType::O => 'O',
            AtomType::F => 'F',
        }
    }

    pub fn from_symbol(s: &str) -> Option<AtomType> {
        match s {
            "C" => Some(AtomType::C),
            "N" => Some(AtomType::N),
            "O" => Some(AtomType::O),
            "F" => Some(AtomType::F),
            _ => None,
        }
    }

    /// Class index used by the dense one-hot encoding.
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<AtomType> {
        Self::ALL.get(i).copied()
    }
}

impl fmt::Display for AtomType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.symbol())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BondType {
    Single = 1,
    Double = 2,
    Triple = 3,
}

impl BondType {
    pub fn order(self) -> u8 {
        self as u8
    }

    pub fn from_order(order: u8) -> Option<BondType> {
        match order {
            1 => Some(BondType::Single),
            2 => Some(BondType::Double),
            3 => Some(BondType::Triple),
            _ => None,
        }
    }
}

/// An undirected bond, stored with `i < j`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Bond {
    pub i: usize,
    pub j: usize,
    pub order: BondType,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("{0} atoms exceeds the maximum of {MAX_ATOMS}")]
    TooManyAtoms(usize),
    #[error("bond ({i}, {j}) references a missing atom")]
    BadIndex { i: usize, j: usize },
    #[error("self bond on atom {0}")]
    SelfBond(usize),
    #[error("duplicate bond between atoms {0} and {1}")]
    DuplicateBond(usize, usize),
}

/// A molecule as typed heavy atoms and typed bonds; hydrogens are implicit.
///
/// The empty graph is representable so that a generator can report an
/// all-padding sample; it is never valid.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct MolGraph {
    atoms: Vec<AtomType>,
    bonds: Vec<Bond>,
    properties: BTreeMap<String, f64>,
}

impl MolGraph {
    pub fn new(atoms: Vec<AtomType>, bonds: impl IntoIterator<Item = (usize, usize, BondType)>) -> Result<Self, GraphError> {
        if atoms.len() > MAX_ATOMS {
            return Err(GraphError::TooManyAtoms(atoms.len()));
        }
        let mut out: Vec<Bond> = Vec::new();
        for (a, b, order) in bonds {
            if a >= atoms.len() || b >= atoms.len() {
                return Err(GraphError::BadIndex { i: a, j: b });
            }
            if a == b {
                return Err(GraphError::SelfBond(a));
            }
            let (i, j) = if a < b { (a, b) } else { (b, a) };
            out.push(Bond { i, j, order });
        }
        out.sort();
        for w in out.windows(2) {
            if (w[0].i, w[0].j) == (w[1].i, w[1].j) {
                return Err(GraphError::DuplicateBond(w[0].i, w[0].j));
            }
        }
        Ok(MolGraph {
            atoms,
            bonds: out,
            properties: BTreeMap::new(),
        })
    }

    pub fn with_properties(mut self, properties: BTreeMap<String, f64>) -> Self {
        self.properties = properties;
        self
    }

    pub fn atoms(&self) -> &[AtomType] {
        &self.atoms
    }

    pub fn bonds(&self) -> &[Bond] {
        &self.bonds
    }

    pub fn properties(&self) -> &BTreeMap<String, f64> {
        &self.properties
    }

    pub fn property(&self, name: &str) -> Option<f64> {
        self.properties.get(name).copied()
    }

    pub fn num_atoms(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn bond_between(&self, a: usize, b: usize) -> Option<BondType> {
        let (i, j) = if a < b { (a, b) } else { (b, a) };
        self.bonds
            .binary_search_by(|bd| (bd.i, bd.j).cmp(&(i, j)))
            .ok()
            .map(|k| self.bonds[k].order)
    }

    /// Bond-order matrix, 0 where there is no bond.
    pub fn order_matrix(&self) -> [[u8; MAX_ATOMS]; MAX_ATOMS] {
        let mut m = [[0u8; MAX_ATOMS]; MAX_ATOMS];
        for b in &self.bonds {
            m[b.i][b.j] = b.order.order();
            m[b.j][b.i] = b.order.order();
        }
        m
    }

    pub fn neighbors(&self, a: usize) -> Vec<(usize, BondType)> {
        let mut out: Vec<(usize, BondType)> = self
            .bonds
            .iter()
            .filter_map(|b| match (b.i == a, b.j == a) {
                (true, _) => Some((b.j, b.order)),
                (_, true) => Some((b.i, b.order)),
                _ => None,
            })
            .collect();
        out.sort();
        out
    }

    /// Total bond order at each atom.
    pub fn bond_order_sums(&self) -> Vec<u32> {
        let mut s = vec![0u32; self.atoms.len()];
        for b in &self.bonds {
            s[b.i] += u32::from(b.order.order());
            s[b.j] += u32::from(b.order.order());
        }
        s
    }

    /// Implicit hydrogens per atom; negative where valence is exceeded.
    pub fn implicit_hydrogens(&self) -> Vec<i32> {
        self.bond_order_sums()
            .iter()
            .zip(&self.atoms)
            .map(|(&s, a)| i32::from(a.valence()) - s as i32)
            .collect()
    }

    pub fn valence_ok(&self) -> bool {
        self.implicit_hydrogens().iter().all(|&h| h >= 0)
    }

    pub fn is_connected(&self) -> bool {
        let n = self.atoms.len();
        if n == 0 {
            return false;
        }
        let mut seen = vec![false; n];
        let mut stack = vec![0usize];
        seen[0] = true;
        while let Some(a) = stack.pop() {
            for (b, _) in self.neighbors(a) {
                if !seen[b] {
                    seen[b] = true;
                    stack.push(b);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }

    /// Atom index sets of each connected component, in order of lowest index.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let n = self.atoms.len();
        let mut comp = vec![usize::MAX; n];
        let mut out = Vec::new();
        for start in 0..n {
            if comp[start] != usize::MAX {
                continue;
            }
            let id = out.len();
            let mut members = vec![start];
            comp[start] = id;
            let mut k = 0;
            while k < members.len() {
                for (b, _) in self.neighbors(members[k]) {
                    if comp[b] == usize::MAX {
                        comp[b] = id;
                        members.push(b);
                    }
                }
                k += 1;
            }
            members.sort_unstable();
            out.push(members);
        }
        out
    }

    /// Sub-graph induced by `atoms` (indices into self), relabeled 0..k.
    pub fn induced(&self, atoms: &[usize]) -> MolGraph {
        let pos = |a: usize| atoms.iter().position(|&x| x == a);
        let types = atoms.iter().map(|&a| self.atoms[a]).collect();
        let bonds = self
            .bonds
            .iter()
            .filter_map(|b| Some((pos(b.i)?, pos(b.j)?, b.order)));
        MolGraph::new(types, bonds).expect("induced subgraph of a valid graph")
    }

    /// Relabels atoms so that old atom `i` becomes new atom `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> MolGraph {
        assert_eq!(perm.len(), self.atoms.len());
        let mut atoms = vec![AtomType::C; self.atoms.len()];
        for (i, &p) in perm.iter().enumerate() {
            atoms[p] = self.atoms[i];
        }
        let bonds = self.bonds.iter().map(|b| (perm[b.i], perm[b.j], b.order));
        MolGraph::new(atoms, bonds)
            .expect("permutation preserves validity")
            .with_properties(self.properties.clone())
    }
}

/// Chemical validity: every atom within its valence and a single connected
/// heavy-atom component.
pub fn is_valid(g: &MolGraph) -> bool {
    g.valence_ok() && g.is_connected()
}

#[cfg(test)]
mod tests {
    use super::*;
    use AtomType::*;
    use BondType::*;

    #[test]
    fn validity_examples() {
        assert!(is_valid(&MolGraph::new(vec![C], []).unwrap()));
        assert!(!is_valid(&MolGraph::new(vec![F, F], [(0, 1, Double)]).unwrap()));
        assert!(!is_valid(&MolGraph::new(vec![C, C], []).unwrap()));
        assert!(!is_valid(&MolGraph::default()));
    }

    #[test]
    fn structural_errors() {
        assert!(matches!(MolGraph::new(vec![C; 10], []), Err(GraphError::TooManyAtoms(10))));
        assert!(matches!(MolGraph::new(vec![C], [(0, 1, Single)]), Err(GraphError::BadIndex { .. })));
        assert!(matches!(MolGraph::new(vec![C], [(0, 0, Single)]), Err(GraphError::SelfBond(0))));
        assert!(matches!(
            MolGraph::new(vec![C, C], [(0, 1, Single), (1, 0, Double)]),
            Err(GraphError::DuplicateBond(0, 1))
        ));
    }

    #[test]
    fn bonds_are_stored_canonically() {
        let g = MolGraph::new(vec![C, O, N], [(2, 0, Single), (1, 0, Double)]).unwrap();
        assert_eq!(
            g.bonds(),
            &[Bond { i: 0, j: 1, order: Double }, Bond { i: 0, j: 2, order: Single }]
        );
        assert_eq!(g.implicit_hydrogens(), vec![1, 0, 2]);
    }

    #[test]
    fn components_split() {
        let g = MolGraph::new(vec![C, O, C, N], [(0, 2, Single), (1, 3, Single)]).unwrap();
        assert_eq!(g.components(), vec![vec![0, 2], vec![1, 3]]);
        let sub = g.induced(&[1, 3]);
        assert_eq!(sub.atoms(), &[O, N]);
        assert_eq!(sub.bond_between(0, 1), Some(Single));
    }
}
