#![no_main]
use ffno_core::ffno::{model_from_bytes, model_to_bytes};
use ffno_core::training::Checkpoint;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(ck) = Checkpoint::from_bytes(data) {
        let bytes = ck.to_bytes().expect("decoded checkpoint re-encodes");
        let again = Checkpoint::from_bytes(&bytes).expect("re-encoded checkpoint decodes");
        assert_eq!(again.to_bytes().unwrap(), bytes);
    }
    if let Ok(model) = model_from_bytes(data) {
        let bytes = model_to_bytes(&model, Default::default()).expect("decoded model re-encodes");
        assert!(model_from_bytes(&bytes).is_ok());
    }
});
