#![no_main]

use libfuzzer_sys::fuzz_target;
use molgen::Model;

fuzz_target!(|data: &[u8]| {
    if let Ok(m) = Model::from_bytes(data) {
        let bytes = m.to_bytes();
        Model::from_bytes(&bytes).expect("written model loads");
    }
});
