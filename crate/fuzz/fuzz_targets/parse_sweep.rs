#![no_main]

use libfuzzer_sys::fuzz_target;
use whet_core::config::{parse_sweep, MAX_SWEEP_POINTS};

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(points) = parse_sweep(text) {
            assert!(!points.is_empty() && points.len() <= MAX_SWEEP_POINTS);
            assert!(points.iter().all(|v| v.is_finite()));
        }
    }
});
