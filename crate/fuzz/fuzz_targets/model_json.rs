#![no_main]

use ivfen::fen::FenModel;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(model) = FenModel::from_json(text) {
        let again = FenModel::from_json(&model.to_json()).unwrap();
        assert_eq!(again.to_json(), model.to_json());
    }
});
