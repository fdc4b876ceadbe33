#![no_main]

use libfuzzer_sys::fuzz_target;
use whet_core::config::parse_config;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(cfg) = parse_config(text) {
            // anything accepted must also build a scenario
            assert!(cfg.scenario().is_ok());
        }
    }
});
