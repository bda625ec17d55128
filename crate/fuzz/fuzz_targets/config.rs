#![no_main]

use libfuzzer_sys::fuzz_target;
use plnc::config::parse_config;

fuzz_target!(|data: &[u8]| {
    if let Ok(s) = std::str::from_utf8(data) {
        if let Ok(cfg) = parse_config(s) {
            assert!(!cfg.experiments.is_empty());
            for e in &cfg.experiments {
                assert!(e.validate().is_ok(), "accepted config fails validation");
            }
        }
    }
});
