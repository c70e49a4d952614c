#![no_main]

use libfuzzer_sys::fuzz_target;
use molgen_chem::oracle::isomorphic;
use molgen_chem::{parse_smiles, write_smiles};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(g) = parse_smiles(text) {
        assert!(g.valence_ok());
        if let Ok(w) = write_smiles(&g) {
            let back = parse_smiles(&w).expect("written SMILES parses");
            assert!(isomorphic(&g, &back));
        }
    }
});
