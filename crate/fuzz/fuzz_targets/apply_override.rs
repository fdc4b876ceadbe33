#![no_main]

use libfuzzer_sys::fuzz_target;
use whet_core::config::{parse_config_with, parse_override};

// one override per line, applied on top of the defaults
fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let overrides: Vec<_> = text.lines().filter_map(|l| parse_override(l).ok()).collect();
    if let Ok(cfg) = parse_config_with("", &overrides) {
        assert!(cfg.scenario().is_ok());
    }
});
