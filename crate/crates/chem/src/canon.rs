//! Exact canonical forms by colour refinement plus individualisation.

use crate::graph::{MolGraph, MAX_ATOMS};

/// Byte key equal for exactly the graphs in one isomorphism class.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CanonicalForm {
    pub key: Vec<u8>,
}

impl CanonicalForm {
    pub fn to_hex(&self) -> String {
        self.key.iter().map(|b| format!("{b:02x}")).collect()
    }
}

struct View {
    n: usize,
    types: Vec<u8>,
    m: [[u8; MAX_ATOMS]; MAX_ATOMS],
}

/// Replaces each colour by the rank of (colour, sorted neighbour multiset)
/// until the number of classes stops growing.
fn refine(v: &View, mut colors: Vec<u32>) -> Vec<u32> {
    let mut classes = count_classes(&colors);
    loop {
        let sigs: Vec<(u32, Vec<(u8, u32)>)> = (0..v.n)
            .map(|i| {
                let mut nb: Vec<(u8, u32)> = (0..v.n)
                    .filter(|&j| v.m[i][j] > 0)
                    .map(|j| (v.m[i][j], colors[j]))
                    .collect();
                nb.sort_unstable();
                (colors[i], nb)
            })
            .collect();
        let mut sorted = sigs.clone();
        sorted.sort();
        sorted.dedup();
        colors = sigs
            .iter()
            .map(|s| sorted.binary_search(s).expect("present") as u32)
            .collect();
        let next = sorted.len();
        if next == classes {
            return colors;
        }
        classes = next;
    }
}

fn count_classes(colors: &[u32]) -> usize {
    let mut c = colors.to_vec();
    c.sort_unstable();
    c.dedup();
    c.len()
}

/// Adjacency and types read off in colour order; colours must be a permutation.
fn certificate(v: &View, colors: &[u32]) -> Vec<u8> {
    let mut at = vec![0usize; v.n];
    for (i, &c) in colors.iter().enumerate() {
        at[c as usize] = i;
    }
    let mut key = Vec::with_capacity(1 + v.n + v.n * (v.n.saturating_sub(1)) / 2);
    key.push(v.n as u8);
    key.extend(at.iter().map(|&i| v.types[i]));
    for a in 0..v.n {
        for b in a + 1..v.n {
            key.push(v.m[at[a]][at[b]]);
        }
    }
    key
}

fn search(v: &View, colors: Vec<u32>, best: &mut Option<Vec<u8>>) {
    let colors = refine(v, colors);
    let mut counts = vec![0usize; v.n];
    for &c in &colors {
        counts[c as usize] += 1;
    }
    let Some(cell) = (0..v.n).find(|&c| counts[c] > 1) else {
        let cert = certificate(v, &colors);
        if best.as_ref().is_none_or(|b| cert < *b) {
            *best = Some(cert);
        }
        return;
    };
    for pick in (0..v.n).filter(|&i| colors[i] as usize == cell) {
        let split = colors
            .iter()
            .enumerate()
            .map(|(i, &c)| 2 * c + u32::from(c as usize == cell && i != pick))
            .collect();
        search(v, split, best);
    }
}

/// Canonical key of `g`: the lexicographically least certificate over every
/// leaf of the refinement search tree. Bond orders and atom types are part
/// of the key, properties are not.
pub fn canonical_form(g: &MolGraph) -> CanonicalForm {
    let v = View {
        n: g.num_atoms(),
        types: g.atoms().iter().map(|a| a.index() as u8).collect(),
        m: g.order_matrix(),
    };
    if v.n == 0 {
        return CanonicalForm { key: vec![0] };
    }
    let initial = v.types.iter().map(|&t| u32::from(t)).collect();
    let mut best = None;
    search(&v, initial, &mut best);
    CanonicalForm {
        key: best.expect("search reaches at least one leaf"),
    }
}
