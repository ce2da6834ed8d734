#![no_main]
use ffno_cli::commands::bench::BenchConfig;
use ffno_cli::commands::train::TrainFile;
use ffno_cli::config::{decode, parse, ConfigFormat};
use ffno_core::dataset::GenerationConfig;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    for format in [ConfigFormat::Toml, ConfigFormat::Json] {
        let Ok(value) = parse(text, format) else { continue };
        if let Ok(cfg) = decode::<GenerationConfig>(value.clone()) {
            let _ = cfg.validate();
        }
        if let Ok(cfg) = decode::<TrainFile>(value.clone()) {
            let _ = cfg.model.validate();
            let _ = cfg.train.validate();
        }
        if let Ok(cfg) = decode::<BenchConfig>(value) {
            let _ = cfg.reference.validate();
        }
    }
});
