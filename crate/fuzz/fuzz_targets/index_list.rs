#![no_main]

use libfuzzer_sys::fuzz_target;
use qshrink::data::parse_index_list;

fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(idx) = parse_index_list(s) {
        // every accepted token is a positive 1-based index or range
        let reprinted = idx.iter().map(|j| (j + 1).to_string()).collect::<Vec<_>>().join(",");
        assert_eq!(parse_index_list(&reprinted).expect("reparse"), idx);
    }
});
