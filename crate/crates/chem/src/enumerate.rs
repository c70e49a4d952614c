//! Graph generators for exhaustive and randomised testing.

use crate::graph::{AtomType, BondType, MolGraph};

/// Every labelled, valence-feasible graph with `n` atoms, connected or not.
pub fn all_graphs(n: usize) -> Vec<MolGraph> {
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    let mut out = Vec::new();
    let types = 4usize.pow(n as u32);
    let edges = 4usize.pow(pairs.len() as u32);
    for tcode in 0..types {
        let atoms: Vec<AtomType> = (0..n)
            .map(|k| AtomType::ALL[(tcode / 4usize.pow(k as u32)) % 4])
            .collect();
        'edges: for ecode in 0..edges {
            let mut load = vec![0u8; n];
            let mut bonds = Vec::new();
            for (k, &(i, j)) in pairs.iter().enumerate() {
                let o = ((ecode / 4usize.pow(k as u32)) % 4) as u8;
                if o == 0 {
                    continue;
                }
                load[i] += o;
                load[j] += o;
                if load[i] > atoms[i].valence() || load[j] > atoms[j].valence() {
                    continue 'edges;
                }
                bonds.push((i, j, BondType::from_order(o).expect("1..=3")));
            }
            out.push(MolGraph::new(atoms.clone(), bonds).expect("enumerated graph is well formed"));
        }
    }
    out
}

/// A random connected valence-feasible graph with `n` atoms. `below(k)`
/// must return a uniform integer in `0..k`.
pub fn random_valid_graph(n: usize, below: &mut impl FnMut(usize) -> usize) -> MolGraph {
    assert!((1..=crate::MAX_ATOMS).contains(&n));
    loop {
        // Grow a random tree with room for each new bond, then add ring bonds.
        let mut atoms = Vec::with_capacity(n);
        let mut load = vec![0u8; n];
        let mut order = [[0u8; 9]; 9];
        let pick_type = |below: &mut dyn FnMut(usize) -> usize| match below(10) {
            0..=5 => AtomType::C,
            6 | 7 => AtomType::N,
            8 => AtomType::O,
            _ => AtomType::F,
        };
        atoms.push(pick_type(below));
        let mut ok = true;
        for k in 1..n {
            let t = if k + 1 < n && below(3) > 0 { AtomType::C } else { pick_type(below) };
            let open: Vec<usize> = (0..k).filter(|&i| load[i] < atoms[i].valence()).collect();
            if open.is_empty() {
                ok = false;
                break;
            }
            let p = open[below(open.len())];
            atoms.push(t);
            load[p] += 1;
            load[k] += 1;
            order[p][k] = 1;
        }
        if !ok || load.iter().zip(&atoms).any(|(&l, a)| l > a.valence()) {
            continue;
        }
        for _ in 0..below(4) {
            let (i, j) = (below(n), below(n));
            if i == j {
                continue;
            }
            let (i, j) = (i.min(j), i.max(j));
            let room = (atoms[i].valence() - load[i]).min(atoms[j].valence() - load[j]);
            if room == 0 || order[i][j] >= 3 {
                continue;
            }
            order[i][j] += 1;
            load[i] += 1;
            load[j] += 1;
        }
        let bonds = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).filter_map(|(i, j)| {
            BondType::from_order(order[i][j]).map(|b| (i, j, b))
        });
        return MolGraph::new(atoms, bonds.collect::<Vec<_>>()).expect("generated graph is well formed");
    }
}

/// A uniformly random permutation of `0..n`.
pub fn random_permutation(n: usize, below: &mut impl FnMut(usize) -> usize) -> Vec<usize> {
    let mut p: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        p.swap(i, below(i + 1));
    }
    p
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::is_valid;

    #[test]
    fn small_counts() {
        assert_eq!(all_graphs(1).len(), 4);
        // Each ordered type pair admits bond orders up to min(valence, 3).
        let expected: usize = AtomType::ALL
            .iter()
            .flat_map(|a| AtomType::ALL.iter().map(move |b| 1 + a.valence().min(b.valence()).min(3) as usize))
            .sum();
        assert_eq!(all_graphs(2).len(), expected);
    }

    #[test]
    fn random_graphs_are_valid() {
        let mut state = 0x9e37_79b9_7f4a_7c15u64;
        let mut below = |k: usize| {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state % k as u64) as usize
        };
        for n in 1..=9 {
            for _ in 0..20 {
                let g = random_valid_graph(n, &mut below);
                assert_eq!(g.num_atoms(), n);
                assert!(is_valid(&g));
            }
        }
    }
}
