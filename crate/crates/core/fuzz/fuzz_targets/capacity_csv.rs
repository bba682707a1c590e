#![no_main]

use libfuzzer_sys::fuzz_target;
use prmimo::report::{parse_capacity_csv, write_capacity_csv};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(rows) = parse_capacity_csv(text) else { return };
    let written = write_capacity_csv(&rows);
    let again = parse_capacity_csv(&written).expect("written csv must parse");
    assert_eq!(written, write_capacity_csv(&again));
});
