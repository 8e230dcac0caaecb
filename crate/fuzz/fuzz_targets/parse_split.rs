#![no_main]

use libfuzzer_sys::fuzz_target;
use prefweight::experiments::parse_split_csv;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(split) = parse_split_csv(text, "split.csv", None) {
            let again = parse_split_csv(&split.to_csv(), "split.csv", None).expect("export parses");
            assert_eq!(again.train_ids, split.train_ids);
            assert_eq!(again.test_ids, split.test_ids);
        }
    }
});
