#![no_main]

use ivfen::io::{parse_csv, write_csv, CsvSchema};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(series) = parse_csv(data, CsvSchema::Bounds) {
        assert!(series.lower().iter().zip(series.upper()).all(|(l, u)| l <= u));
        let mut out = Vec::new();
        write_csv(&series, &mut out).unwrap();
        let again = parse_csv(out.as_slice(), CsvSchema::Bounds).unwrap();
        assert_eq!(again, series);
    }
});
