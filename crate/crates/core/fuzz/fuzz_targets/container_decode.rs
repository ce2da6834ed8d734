#![no_main]
use ffno_core::container::decode;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    // the magic is checked first; try both so the rest of the decoder is reached
    for magic in [b"FFNODS1\0", b"FFNOCK1\0"] {
        let _ = decode(magic, data);
    }
});
