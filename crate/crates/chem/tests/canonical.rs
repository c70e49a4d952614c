use std::collections::HashMap;

use molgen_chem::enumerate::{all_graphs, random_permutation, random_valid_graph};
use molgen_chem::oracle::isomorphic;
use molgen_chem::{canonical_form, BondType, MolGraph};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Cheap isomorphism invariant used only to bucket graphs before the
/// pairwise oracle runs.
fn invariant(g: &MolGraph) -> Vec<u32> {
    let mut atoms: Vec<u32> = g.atoms().iter().map(|a| a.index() as u32).collect();
    atoms.sort_unstable();
    let mut deg: Vec<u32> = g
        .neighbors_all()
        .into_iter()
        .map(|(t, d)| t * 100 + d)
        .collect();
    deg.sort_unstable();
    let mut orders: Vec<u32> = g.bonds().iter().map(|b| u32::from(b.order.order())).collect();
    orders.sort_unstable();
    [vec![g.num_atoms() as u32], atoms, deg, orders].concat()
}

trait Degrees {
    fn neighbors_all(&self) -> Vec<(u32, u32)>;
}

impl Degrees for MolGraph {
    fn neighbors_all(&self) -> Vec<(u32, u32)> {
        let sums = self.bond_order_sums();
        (0..self.num_atoms())
            .map(|i| (self.atoms()[i].index() as u32, sums[i] * 10 + self.neighbors(i).len() as u32))
            .collect()
    }
}

#[test]
fn keys_collide_iff_isomorphic_up_to_four_atoms() {
    for n in 1..=4 {
        let graphs = all_graphs(n);
        let mut by_key: HashMap<Vec<u8>, usize> = HashMap::new();
        for (k, g) in graphs.iter().enumerate() {
            let key = canonical_form(g).key;
            match by_key.get(&key) {
                Some(&rep) => assert!(isomorphic(&graphs[rep], g), "{:?} vs {:?}", graphs[rep], g),
                None => {
                    by_key.insert(key, k);
                }
            }
        }
        let mut buckets: HashMap<Vec<u32>, Vec<usize>> = HashMap::new();
        for &rep in by_key.values() {
            buckets.entry(invariant(&graphs[rep])).or_default().push(rep);
        }
        for reps in buckets.values() {
            for (x, &a) in reps.iter().enumerate() {
                for &b in &reps[x + 1..] {
                    assert!(!isomorphic(&graphs[a], &graphs[b]), "distinct keys for isomorphic graphs");
                }
            }
        }
    }
}

#[test]
fn relabeled_nine_atom_pairs_share_keys() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut below = |k: usize| rng.random_range(0..k);
    for _ in 0..1000 {
        let g = random_valid_graph(9, &mut below);
        let p = random_permutation(9, &mut below);
        let h = g.permuted(&p);
        assert!(isomorphic(&g, &h));
        assert_eq!(canonical_form(&g), canonical_form(&h));
    }
}

#[test]
fn perturbed_nine_atom_pairs_differ_exactly_when_oracle_says_so() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut below = |k: usize| rng.random_range(0..k);
    for _ in 0..300 {
        let g = random_valid_graph(9, &mut below);
        let Some(b) = g.bonds().first().copied() else { continue };
        let flipped = match b.order {
            BondType::Single => BondType::Double,
            _ => BondType::Single,
        };
        let bonds = g
            .bonds()
            .iter()
            .map(|x| (x.i, x.j, if (x.i, x.j) == (b.i, b.j) { flipped } else { x.order }));
        let h = MolGraph::new(g.atoms().to_vec(), bonds.collect::<Vec<_>>()).unwrap();
        let p = random_permutation(9, &mut below);
        let h = h.permuted(&p);
        assert_eq!(isomorphic(&g, &h), canonical_form(&g) == canonical_form(&h));
    }
}
