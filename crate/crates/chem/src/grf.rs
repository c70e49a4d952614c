//! Plain-text graph dump:
//!
//! ```text
//! # acetaldehyde
//! atoms C C O
//! bond 0 1 1
//! bond 1 2 2
//! ```

use thiserror::Error;

use crate::graph::{AtomType, BondType, GraphError, MolGraph};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GrfError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("missing `atoms` line")]
    NoAtoms,
    #[error(transparent)]
    Graph(#[from] GraphError),
}

fn syntax(line: usize, msg: impl Into<String>) -> GrfError {
    GrfError::Syntax { line, msg: msg.into() }
}

pub fn parse_grf(text: &str) -> Result<MolGraph, GrfError> {
    let mut atoms: Option<Vec<AtomType>> = None;
    let mut bonds = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let body = raw.split('#').next().unwrap_or("");
        let mut words = body.split_whitespace();
        let Some(head) = words.next() else { continue };
        match head {
            "atoms" => {
                if atoms.is_some() {
                    return Err(syntax(line, "repeated `atoms` line"));
                }
                let list = words
                    .map(|w| AtomType::from_symbol(w).ok_or_else(|| syntax(line, format!("unknown atom `{w}`"))))
                    .collect::<Result<Vec<_>, _>>()?;
                atoms = Some(list);
            }
            "bond" => {
                if atoms.is_none() {
                    return Err(syntax(line, "`bond` before `atoms`"));
                }
                let f: Vec<&str> = words.collect();
                if f.len() != 3 {
                    return Err(syntax(line, "expected `bond i j order`"));
                }
                let num = |s: &str| s.parse::<usize>().map_err(|_| syntax(line, format!("bad number `{s}`")));
                let (i, j) = (num(f[0])?, num(f[1])?);
                let order = u8::try_from(num(f[2])?)
                    .ok()
                    .and_then(BondType::from_order)
                    .ok_or_else(|| syntax(line, format!("bad bond order `{}`", f[2])))?;
                bonds.push((i, j, order));
            }
            other => return Err(syntax(line, format!("unknown record `{other}`"))),
        }
    }
    let atoms = atoms.ok_or(GrfError::NoAtoms)?;
    Ok(MolGraph::new(atoms, bonds)?)
}

pub fn write_grf(g: &MolGraph) -> String {
    let mut out = String::from("atoms");
    for a in g.atoms() {
        out.push(' ');
        out.push(a.symbol());
    }
    out.push('\n');
    for b in g.bonds() {
        out.push_str(&format!("bond {} {} {}\n", b.i, b.j, b.order.order()));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::smiles::parse_smiles;

    #[test]
    fn round_trip() {
        let g = parse_smiles("CC(=O)N1CC1").unwrap();
        let text = write_grf(&g);
        assert!(text.starts_with("atoms C C O N C C\nbond 0 1 1\n"));
        assert_eq!(parse_grf(&text).unwrap(), g);
    }

    #[test]
    fn comments_and_whitespace() {
        let g = parse_grf("# formaldehyde\n  atoms   C O  # two atoms\n\nbond 1 0 2\n").unwrap();
        assert_eq!(g, parse_smiles("C=O").unwrap());
    }

    #[test]
    fn errors() {
        assert_eq!(parse_grf(""), Err(GrfError::NoAtoms));
        assert!(matches!(parse_grf("bond 0 1 1"), Err(GrfError::Syntax { line: 1, .. })));
        assert!(matches!(parse_grf("atoms C X"), Err(GrfError::Syntax { line: 1, .. })));
        assert!(matches!(parse_grf("atoms C C\nbond 0 1 4"), Err(GrfError::Syntax { line: 2, .. })));
        assert!(matches!(parse_grf("atoms C C\nbond 0 1"), Err(GrfError::Syntax { line: 2, .. })));
        assert!(matches!(parse_grf("atoms C\nbond 0 3 1"), Err(GrfError::Graph(_))));
    }
}
