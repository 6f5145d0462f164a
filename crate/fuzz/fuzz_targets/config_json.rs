#![no_main]

use ivfen::pipeline::ExperimentConfig;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(cfg) = ExperimentConfig::from_json(text) {
        let again = ExperimentConfig::from_json(&cfg.to_json()).unwrap();
        assert_eq!(again.hash(), cfg.hash());
        let _ = cfg.plan();
    }
});
