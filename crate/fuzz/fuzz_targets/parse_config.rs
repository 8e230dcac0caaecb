#![no_main]

use libfuzzer_sys::fuzz_target;
use prefweight::cli::ExperimentConfig;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(config) = ExperimentConfig::from_json(text) {
            let again = ExperimentConfig::from_json(&config.to_json()).expect("export parses");
            assert_eq!(again, config);
        }
    }
});
