#![no_main]

use libfuzzer_sys::fuzz_target;
use molgen_chem::{ingest_reader, write_dataset};

fuzz_target!(|data: &[u8]| {
    if let Ok((ds, _)) = ingest_reader(data, Some(64)) {
        let mut out = Vec::new();
        write_dataset(&ds, &mut out).expect("ingested rows carry every column");
        let (again, _) = ingest_reader(out.as_slice(), None).expect("written dataset parses");
        assert_eq!(again.len(), ds.len());
    }
});
