#![no_main]

use libfuzzer_sys::fuzz_target;
use prefweight::dataset::parse_questions;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(questions) = parse_questions(text, "questions.csv") {
            assert!(questions.iter().all(|q| q.weight.is_finite()));
        }
    }
});
