//! The C/N/O/F SMILES subset: atoms, `-` `=` `#` bonds, branches and
//! ring-closure digits 1-9. Hydrogens are implicit.

use thiserror::Error;

use crate::graph::{AtomType, BondType, MolGraph, MAX_ATOMS};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SmilesErrorKind {
    #[error("empty input")]
    Empty,
    #[error("unsupported token `{0}`")]
    Unsupported(char),
    #[error("bond or branch with no preceding atom")]
    NoPrecedingAtom,
    #[error("bond symbol not followed by an atom or ring digit")]
    DanglingBond,
    #[error("empty branch")]
    EmptyBranch,
    #[error("unmatched `)`")]
    UnmatchedClose,
    #[error("unclosed branch")]
    UnclosedBranch,
    #[error("ring {0} is never closed")]
    UnclosedRing(u8),
    #[error("ring {0} closes onto its opening atom")]
    RingSelfLoop(u8),
    #[error("ring {0} duplicates an existing bond")]
    RingDuplicateBond(u8),
    #[error("ring {0} closure bond conflicts with its opening bond")]
    RingBondConflict(u8),
    #[error("more than {MAX_ATOMS} heavy atoms")]
    TooManyAtoms,
    #[error("atom exceeds its valence of {0}")]
    ValenceOverflow(u8),
}

/// Parse failure with the character offset it was detected at.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("SMILES parse error at position {position}: {kind}")]
pub struct SmilesError {
    pub position: usize,
    pub kind: SmilesErrorKind,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum WriteError {
    #[error("cannot write an empty molecule")]
    Empty,
    #[error("molecule has {0} disconnected components")]
    Disconnected(usize),
    #[error("more than 9 ring closures open at once")]
    RingDigitsExhausted,
}

fn err(position: usize, kind: SmilesErrorKind) -> SmilesError {
    SmilesError { position, kind }
}

struct OpenRing {
    atom: usize,
    bond: Option<BondType>,
}

/// Parses one molecule in the supported subset.
pub fn parse_smiles(text: &str) -> Result<MolGraph, SmilesError> {
    let chars: Vec<char> = text.chars().collect();
    if chars.is_empty() {
        return Err(err(0, SmilesErrorKind::Empty));
    }
    let mut atoms: Vec<AtomType> = Vec::new();
    let mut atom_pos: Vec<usize> = Vec::new();
    let mut bonds: Vec<(usize, usize, BondType)> = Vec::new();
    let mut current: Option<usize> = None;
    let mut pending: Option<(BondType, usize)> = None;
    // (atom the branch hangs from, position of `(`, whether anything followed)
    let mut branches: Vec<(usize, usize, bool)> = Vec::new();
    let mut rings: [Option<OpenRing>; 10] = Default::default();
    let has_bond = |bonds: &[(usize, usize, BondType)], a: usize, b: usize| {
        bonds.iter().any(|&(i, j, _)| (i == a && j == b) || (i == b && j == a))
    };

    for (pos, &c) in chars.iter().enumerate() {
        match c {
            'C' | 'N' | 'O' | 'F' => {
                if atoms.len() == MAX_ATOMS {
                    return Err(err(pos, SmilesErrorKind::TooManyAtoms));
                }
                let t = AtomType::from_symbol(&c.to_string()).expect("symbol matched above");
                let id = atoms.len();
                atoms.push(t);
                atom_pos.push(pos);
                if let Some(prev) = current {
                    let order = pending.take().map_or(BondType::Single, |(b, _)| b);
                    bonds.push((prev, id, order));
                }
                if let Some(top) = branches.last_mut() {
                    top.2 = true;
                }
                current = Some(id);
            }
            '-' | '=' | '#' => {
                if current.is_none() {
                    return Err(err(pos, SmilesErrorKind::NoPrecedingAtom));
                }
                if pending.is_some() {
                    return Err(err(pos, SmilesErrorKind::DanglingBond));
                }
                let b = match c {
                    '-' => BondType::Single,
                    '=' => BondType::Double,
                    _ => BondType::Triple,
                };
                pending = Some((b, pos));
            }
            '(' => {
                let Some(a) = current else {
                    return Err(err(pos, SmilesErrorKind::NoPrecedingAtom));
                };
                if let Some((_, p)) = pending {
                    return Err(err(p, SmilesErrorKind::DanglingBond));
                }
                branches.push((a, pos, false));
            }
            ')' => {
                let Some((a, _, nonempty)) = branches.pop() else {
                    return Err(err(pos, SmilesErrorKind::UnmatchedClose));
                };
                if let Some((_, p)) = pending {
                    return Err(err(p, SmilesErrorKind::DanglingBond));
                }
                if !nonempty {
                    return Err(err(pos, SmilesErrorKind::EmptyBranch));
                }
                current = Some(a);
            }
            '1'..='9' => {
                let Some(a) = current else {
                    return Err(err(pos, SmilesErrorKind::NoPrecedingAtom));
                };
                let d = c as u8 - b'0';
                let bond = pending.take().map(|(b, _)| b);
                match rings[d as usize].take() {
                    None => rings[d as usize] = Some(OpenRing { atom: a, bond }),
                    Some(open) => {
                        if open.atom == a {
                            return Err(err(pos, SmilesErrorKind::RingSelfLoop(d)));
                        }
                        if has_bond(&bonds, open.atom, a) {
                            return Err(err(pos, SmilesErrorKind::RingDuplicateBond(d)));
                        }
                        let order = match (open.bond, bond) {
                            (Some(x), Some(y)) if x != y => {
                                return Err(err(pos, SmilesErrorKind::RingBondConflict(d)))
                            }
                            (Some(x), _) | (None, Some(x)) => x,
                            (None, None) => BondType::Single,
                        };
                        bonds.push((open.atom, a, order));
                    }
                }
            }
            other => return Err(err(pos, SmilesErrorKind::Unsupported(other))),
        }
    }

    if let Some((_, p)) = pending {
        return Err(err(p, SmilesErrorKind::DanglingBond));
    }
    if let Some(&(_, p, _)) = branches.last() {
        return Err(err(p, SmilesErrorKind::UnclosedBranch));
    }
    for (d, r) in rings.iter().enumerate() {
        if r.is_some() {
            return Err(err(chars.len(), SmilesErrorKind::UnclosedRing(d as u8)));
        }
    }
    let g = MolGraph::new(atoms, bonds).expect("parser emits well-formed bonds");
    if let Some(bad) = g.implicit_hydrogens().iter().position(|&h| h < 0) {
        let t = g.atoms()[bad];
        return Err(err(atom_pos[bad], SmilesErrorKind::ValenceOverflow(t.valence())));
    }
    Ok(g)
}

fn bond_symbol(b: BondType) -> &'static str {
    match b {
        BondType::Single => "",
        BondType::Double => "=",
        BondType::Triple => "#",
    }
}

/// Writes a connected molecule as SMILES.
///
/// The walk starts at atom 0 and visits neighbours in ascending index order;
/// all neighbours but the last become parenthesised branches. Ring-closure
/// bonds carry their bond symbol on the opening digit.
pub fn write_smiles(g: &MolGraph) -> Result<String, WriteError> {
    let n = g.num_atoms();
    if n == 0 {
        return Err(WriteError::Empty);
    }
    let comps = g.components().len();
    if comps > 1 {
        return Err(WriteError::Disconnected(comps));
    }

    // First pass: spanning tree and the remaining (ring) bonds, by discovery order.
    let mut order = vec![usize::MAX; n];
    let mut children: Vec<Vec<(usize, BondType)>> = vec![Vec::new(); n];
    let mut ring_bonds: Vec<(usize, usize, BondType)> = Vec::new();
    let mut seen = 0;
    discover(g, 0, usize::MAX, &mut order, &mut seen, &mut children, &mut ring_bonds);

    // Per atom: ring bonds it opens and closes, partner sorted by discovery order.
    let mut opens: Vec<Vec<(usize, usize, BondType)>> = vec![Vec::new(); n];
    let mut closes: Vec<Vec<(usize, usize, BondType)>> = vec![Vec::new(); n];
    for &(a, b, t) in &ring_bonds {
        let (first, last) = if order[a] < order[b] { (a, b) } else { (b, a) };
        opens[first].push((order[last], last, t));
        closes[last].push((order[first], first, t));
    }
    for v in opens.iter_mut().chain(closes.iter_mut()) {
        v.sort();
    }

    let mut out = String::new();
    let mut digits: [Option<(usize, usize)>; 10] = [None; 10];
    emit(g, 0, &children, &opens, &closes, &mut digits, &mut out)?;
    Ok(out)
}

fn discover(
    g: &MolGraph,
    a: usize,
    parent: usize,
    order: &mut [usize],
    seen: &mut usize,
    children: &mut [Vec<(usize, BondType)>],
    ring_bonds: &mut Vec<(usize, usize, BondType)>,
) {
    order[a] = *seen;
    *seen += 1;
    for (b, t) in g.neighbors(a) {
        if b == parent {
            continue;
        }
        if order[b] == usize::MAX {
            children[a].push((b, t));
            discover(g, b, a, order, seen, children, ring_bonds);
        } else if order[b] < order[a] {
            ring_bonds.push((b, a, t));
        }
    }
}

fn emit(
    g: &MolGraph,
    a: usize,
    children: &[Vec<(usize, BondType)>],
    opens: &[Vec<(usize, usize, BondType)>],
    closes: &[Vec<(usize, usize, BondType)>],
    digits: &mut [Option<(usize, usize)>; 10],
    out: &mut String,
) -> Result<(), WriteError> {
    out.push(g.atoms()[a].symbol());
    for &(_, partner, _) in &closes[a] {
        let d = (1..10)
            .find(|&d| digits[d] == Some((partner, a)))
            .expect("ring opened before it closes");
        digits[d] = None;
        out.push(char::from(b'0' + d as u8));
    }
    for &(_, partner, t) in &opens[a] {
        let d = (1..10).find(|&d| digits[d].is_none()).ok_or(WriteError::RingDigitsExhausted)?;
        digits[d] = Some((a, partner));
        out.push_str(bond_symbol(t));
        out.push(char::from(b'0' + d as u8));
    }
    let kids = &children[a];
    for (k, &(c, t)) in kids.iter().enumerate() {
        let last = k + 1 == kids.len();
        if !last {
            out.push('(');
        }
        out.push_str(bond_symbol(t));
        emit(g, c, children, opens, closes, digits, out)?;
        if !last {
            out.push(')');
        }
    }
    Ok(())
}

/// Like [`write_smiles`] but total: a disconnected molecule is written as
/// `.`-joined components and an empty one as `*`. Neither parses back, so
/// such strings count as invalid wherever SMILES are re-read.
pub fn write_smiles_lossy(g: &MolGraph) -> String {
    if g.is_empty() {
        return "*".to_string();
    }
    if g.is_connected() {
        if let Ok(s) = write_smiles(g) {
            return s;
        }
    }
    g.components()
        .iter()
        .map(|c| write_smiles(&g.induced(c)).unwrap_or_else(|_| "*".to_string()))
        .collect::<Vec<_>>()
        .join(".")
}
