#![no_main]

use ivfen::io::{parse_csv, CsvSchema};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(series) = parse_csv(data, CsvSchema::Ohlc) {
        let cr = series.to_center_range();
        assert!(cr.range().iter().all(|r| *r >= 0.0));
    }
});
