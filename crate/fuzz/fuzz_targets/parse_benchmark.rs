#![no_main]

use libfuzzer_sys::fuzz_target;
use prefweight::scoring::WeightedBenchmark;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(b) = WeightedBenchmark::parse_csv(text, "benchmark.csv") {
            let again = WeightedBenchmark::parse_csv(&b.to_csv(), "benchmark.csv").expect("export parses");
            assert_eq!(again.question_ids, b.question_ids);
        }
    }
});
