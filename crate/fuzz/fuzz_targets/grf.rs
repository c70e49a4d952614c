#![no_main]

use libfuzzer_sys::fuzz_target;
use molgen_chem::{parse_grf, write_grf};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(g) = parse_grf(text) {
        let back = parse_grf(&write_grf(&g)).expect("written graph parses");
        assert_eq!(back, g);
    }
});
