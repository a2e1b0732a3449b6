#![no_main]

use hetnet_da::experiment::{render_config, validate_config};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(cfg) = validate_config(text) {
        assert_eq!(validate_config(&render_config(&cfg)).unwrap(), cfg);
    }
});
