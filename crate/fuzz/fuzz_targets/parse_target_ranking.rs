#![no_main]

use libfuzzer_sys::fuzz_target;
use prefweight::dataset::parse_target_ranking;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(t) = parse_target_ranking(text, "target.csv", None) {
            let mut ranks: Vec<usize> = t.ranks().values().copied().collect();
            ranks.sort_unstable();
            assert!(ranks.iter().enumerate().all(|(i, &r)| r == i + 1));
        }
    }
});
