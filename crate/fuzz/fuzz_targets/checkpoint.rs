#![no_main]

use libfuzzer_sys::fuzz_target;
use molgen_tensor::checkpoint::{checkpoint_bytes, parse_checkpoint};

fuzz_target!(|data: &[u8]| {
    if let Ok(store) = parse_checkpoint(data) {
        let again = parse_checkpoint(&checkpoint_bytes(&store)).expect("written checkpoint parses");
        assert_eq!(again.len(), store.len());
    }
});
