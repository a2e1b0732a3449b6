#![no_main]

use hetnet_da::experiment::read_figure_csv;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(table) = read_figure_csv(text) {
        let again = read_figure_csv(&table.to_csv().unwrap()).unwrap();
        assert_eq!(again.rows.len(), table.rows.len());
    }
});
