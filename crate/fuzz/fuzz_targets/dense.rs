#![no_main]

use libfuzzer_sys::fuzz_target;
use molgen_chem::dense::{EDGE_CLASSES, NODE_CLASSES, N_MAX};
use molgen_chem::{from_dense, to_dense, DenseGraph};

fuzz_target!(|data: &[u8]| {
    let need = N_MAX * NODE_CLASSES + N_MAX * N_MAX * EDGE_CLASSES;
    if data.len() < need {
        return;
    }
    let vals: Vec<f64> = data[..need].iter().map(|&b| f64::from(b & 1)).collect();
    let (x, a) = vals.split_at(N_MAX * NODE_CLASSES);
    if let Ok(d) = DenseGraph::from_parts(x.to_vec(), a.to_vec()) {
        let g = from_dense(&d).expect("validated dense graph converts");
        assert_eq!(from_dense(&to_dense(&g)).expect("round trip"), g);
    }
});
