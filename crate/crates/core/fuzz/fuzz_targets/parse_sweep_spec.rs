#![no_main]

use hetnet_da::experiment::parse_sweep_spec;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(spec) = parse_sweep_spec(text) {
        assert!(!spec.values.is_empty());
        assert!(spec.values.windows(2).all(|w| w[0] < w[1]));
        assert!(spec.base.validate().is_ok());
    }
});
