//! Brute-force isomorphism by searching every atom permutation.
//!
//! Slow and obviously correct; tests use it to check [`crate::canonical_form`].

use crate::graph::MolGraph;

/// True if some bijection of atoms maps `a` onto `b` preserving atom types
/// and bond orders.
pub fn isomorphic(a: &MolGraph, b: &MolGraph) -> bool {
    find_isomorphism(a, b).is_some()
}

/// A permutation `p` with `a.permuted(&p) == b` up to properties, if any.
pub fn find_isomorphism(a: &MolGraph, b: &MolGraph) -> Option<Vec<usize>> {
    let n = a.num_atoms();
    if n != b.num_atoms() || a.bonds().len() != b.bonds().len() {
        return None;
    }
    let ma = a.order_matrix();
    let mb = b.order_matrix();
    let mut perm = vec![usize::MAX; n];
    let mut used = vec![false; n];
    fn extend(
        k: usize,
        a: &MolGraph,
        b: &MolGraph,
        ma: &[[u8; 9]; 9],
        mb: &[[u8; 9]; 9],
        perm: &mut [usize],
        used: &mut [bool],
    ) -> bool {
        let n = perm.len();
        if k == n {
            return true;
        }
        for t in 0..n {
            if used[t] || a.atoms()[k] != b.atoms()[t] {
                continue;
            }
            if (0..k).any(|i| ma[k][i] != mb[t][perm[i]]) {
                continue;
            }
            perm[k] = t;
            used[t] = true;
            if extend(k + 1, a, b, ma, mb, perm, used) {
                return true;
            }
            used[t] = false;
        }
        false
    }
    extend(0, a, b, &ma, &mb, &mut perm, &mut used).then_some(perm)
}
