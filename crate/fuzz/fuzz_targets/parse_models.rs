#![no_main]

use libfuzzer_sys::fuzz_target;
use prefweight::dataset::parse_models;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(models) = parse_models(text, "models.csv") {
            let ids: std::collections::HashSet<_> = models.iter().map(|m| &m.model_id).collect();
            assert_eq!(ids.len(), models.len());
        }
    }
});
