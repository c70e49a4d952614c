use std::path::Path;

use molgen_chem::enumerate::random_valid_graph;
use molgen_chem::oracle::isomorphic;
use molgen_chem::{ingest_qm9, parse_smiles, write_smiles};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SAMPLE: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/data/qm9_sample.csv");

#[test]
fn random_graphs_round_trip() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut below = |k: usize| rng.random_range(0..k);
    for k in 0..100 {
        let g = random_valid_graph(1 + k % 9, &mut below);
        let s = write_smiles(&g).unwrap();
        let back = parse_smiles(&s).unwrap_or_else(|e| panic!("{s}: {e}"));
        assert!(isomorphic(&g, &back), "{s}");
        assert_eq!(write_smiles(&back).unwrap().len(), s.len());
    }
}

#[test]
fn writer_is_deterministic() {
    let g = parse_smiles("OC1C(N)C1C#N").unwrap();
    assert_eq!(write_smiles(&g).unwrap(), write_smiles(&g.clone()).unwrap());
}

#[test]
fn sample_corpus_round_trips() {
    let (ds, rep) = ingest_qm9(Path::new(SAMPLE), Some(5000)).unwrap();
    assert_eq!(ds.len(), 5000);
    assert!(rep.skipped_unsupported > 0, "fixture includes aromatic rows");
    for (text, g) in ds.smiles.iter().zip(&ds.molecules) {
        let s = write_smiles(g).unwrap();
        let back = parse_smiles(&s).unwrap();
        assert!(isomorphic(g, &back), "{text} -> {s}");
    }
}

proptest! {
    #[test]
    fn parser_is_total(s in "[CNOF=#\\-()1-9c.\\[\\] ]{0,24}") {
        if let Ok(g) = parse_smiles(&s) {
            prop_assert!(g.valence_ok());
            prop_assert!(g.num_atoms() >= 1 && g.num_atoms() <= 9);
        }
    }
}
