//! Validity, uniqueness, novelty, and their conjunction over a list of
//! generated molecules. Identity is the isomorphism class.

use std::collections::BTreeSet;
use std::io::Write;

use molgen_chem::{canonical_form, is_valid, parse_smiles, CanonicalForm, MolGraph};

/// Full-QM9 reference values, in percent, shown beside measured ones.
pub const REFERENCE_VALIDITY: f64 = 74.6;
pub const REFERENCE_UNIQUENESS: f64 = 22.5;
pub const REFERENCE_NOVELTY: f64 = 93.9;
pub const REFERENCE_VUN: f64 = 15.8;

#[derive(Clone, Debug, PartialEq)]
pub struct EvalReport {
    pub n_generated: usize,
    pub n_valid: usize,
    /// Distinct canonical forms among the valid molecules.
    pub n_unique: usize,
    /// Distinct valid canonical forms absent from the training set.
    pub n_novel: usize,
    pub validity: f64,
    pub uniqueness: f64,
    pub novelty: f64,
    pub vun: f64,
    /// Set when nothing was valid; uniqueness and novelty are then 0.
    pub no_valid: bool,
    /// Lines that failed to parse; they count as generated and invalid.
    pub skipped_parse_failures: usize,
}

pub fn canonical_set<'a>(molecules: impl IntoIterator<Item = &'a MolGraph>) -> BTreeSet<CanonicalForm> {
    molecules.into_iter().map(canonical_form).collect()
}

fn ratio(a: usize, b: usize) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

fn report(n: usize, valid: &[&MolGraph], training: &BTreeSet<CanonicalForm>, skipped: usize) -> EvalReport {
    let distinct = canonical_set(valid.iter().copied());
    let novel = distinct.iter().filter(|k| !training.contains(k)).count();
    EvalReport {
        n_generated: n,
        n_valid: valid.len(),
        n_unique: distinct.len(),
        n_novel: novel,
        validity: ratio(valid.len(), n),
        uniqueness: ratio(distinct.len(), valid.len()),
        novelty: ratio(novel, distinct.len()),
        vun: ratio(novel, n),
        no_valid: valid.is_empty(),
        skipped_parse_failures: skipped,
    }
}

pub fn evaluate_metrics(generated: &[MolGraph], training: &BTreeSet<CanonicalForm>) -> EvalReport {
    let valid: Vec<&MolGraph> = generated.iter().filter(|g| is_valid(g)).collect();
    report(generated.len(), &valid, training, 0)
}

/// Metrics over one SMILES string per line; blank lines are ignored.
pub fn evaluate_smiles<'a>(lines: impl IntoIterator<Item = &'a str>, training: &BTreeSet<CanonicalForm>) -> EvalReport {
    let mut n = 0;
    let mut skipped = 0;
    let mut parsed = Vec::new();
    for line in lines {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        n += 1;
        match parse_smiles(line) {
            Ok(g) => parsed.push(g),
            Err(e) => {
                log::debug!("unparseable generated SMILES `{line}`: {e}");
                skipped += 1;
            }
        }
    }
    let valid: Vec<&MolGraph> = parsed.iter().filter(|g| is_valid(g)).collect();
    report(n, &valid, training, skipped)
}

/// `metric,measured,reference_full_qm9` rows, fractions in percent.
pub fn write_report<W: Write>(r: &EvalReport, mut w: W) -> std::io::Result<()> {
    writeln!(w, "metric,measured,reference_full_qm9")?;
    writeln!(w, "n_generated,{},", r.n_generated)?;
    writeln!(w, "n_valid,{},", r.n_valid)?;
    writeln!(w, "n_unique,{},", r.n_unique)?;
    writeln!(w, "n_novel,{},", r.n_novel)?;
    writeln!(w, "skipped_parse_failures,{},", r.skipped_parse_failures)?;
    writeln!(w, "no_valid,{},", r.no_valid)?;
    writeln!(w, "validity_pct,{:.2},{REFERENCE_VALIDITY:.1}", 100.0 * r.validity)?;
    writeln!(w, "uniqueness_pct,{:.2},{REFERENCE_UNIQUENESS:.1}", 100.0 * r.uniqueness)?;
    writeln!(w, "novelty_pct,{:.2},{REFERENCE_NOVELTY:.1}", 100.0 * r.novelty)?;
    writeln!(w, "vun_pct,{:.2},{REFERENCE_VUN:.1}", 100.0 * r.vun)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(s: &str) -> MolGraph {
        parse_smiles(s).unwrap()
    }

    #[test]
    fn half_valid() {
        let disconnected = MolGraph::new(vec![molgen_chem::AtomType::C; 2], []).unwrap();
        let gen = vec![m("CC"), disconnected.clone(), m("CO"), disconnected];
        let r = evaluate_metrics(&gen, &BTreeSet::new());
        assert_eq!(r.validity, 0.5);
    }

    #[test]
    fn worked_uniqueness_and_novelty() {
        let gen = vec![m("CCO"), m("OCC"), m("CN")];
        let training = canonical_set([&m("C(C)O")]);
        let r = evaluate_metrics(&gen, &training);
        assert_eq!(r.uniqueness, 2.0 / 3.0);
        assert_eq!(r.novelty, 0.5);
        assert_eq!(r.vun, 1.0 / 3.0);
    }

    #[test]
    fn nothing_valid_is_flagged() {
        let r = evaluate_smiles(["C.C", "*", "", "Xe"], &BTreeSet::new());
        assert_eq!(r.n_generated, 3);
        assert_eq!(r.skipped_parse_failures, 3);
        assert!(r.no_valid);
        assert_eq!((r.validity, r.uniqueness, r.novelty, r.vun), (0.0, 0.0, 0.0, 0.0));
    }

    #[test]
    fn report_layout() {
        let r = evaluate_smiles(["CC", "CC", "C=O", "C.C"], &canonical_set([&m("CC")]));
        let mut buf = Vec::new();
        write_report(&r, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.contains("validity_pct,75.00,74.6\n"), "{text}");
        assert!(text.contains("uniqueness_pct,66.67,22.5\n"));
        assert!(text.contains("novelty_pct,50.00,93.9\n"));
        assert!(text.contains("vun_pct,25.00,15.8\n"));
    }
}
