#![no_main]

use libfuzzer_sys::fuzz_target;
use prefweight::dataset::{parse_responses, ModelRecord, QuestionRecord};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let models: Vec<ModelRecord> = ["m1", "m2", "m3"]
        .iter()
        .map(|id| ModelRecord {
            model_id: id.to_string(),
            param_count: None,
            excluded: false,
        })
        .collect();
    let questions: Vec<QuestionRecord> = ["q1", "q2"]
        .iter()
        .map(|id| QuestionRecord {
            question_id: id.to_string(),
            benchmark: "B".into(),
            task: "t".into(),
            weight: 1.0,
        })
        .collect();
    if let Ok(entries) = parse_responses(text, "responses.csv", &models, &questions) {
        assert_eq!(entries.len(), 6);
        assert!(entries.iter().all(|&v| v <= 1));
    }
});
