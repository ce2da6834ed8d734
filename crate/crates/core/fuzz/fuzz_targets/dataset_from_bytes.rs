#![no_main]
use ffno_core::dataset::{from_bytes, to_bytes};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(ds) = from_bytes(data) {
        // anything accepted must survive a round trip unchanged
        let bytes = to_bytes(&ds).expect("decoded dataset re-encodes");
        let again = from_bytes(&bytes).expect("re-encoded dataset decodes");
        assert_eq!(to_bytes(&again).unwrap(), bytes);
    }
});
