#![no_main]

use libfuzzer_sys::fuzz_target;
use vvlc::measurement::{parse_sweep_csv, write_sweep_csv};

fuzz_target!(|data: &[u8]| {
    if let Ok(records) = parse_sweep_csv(data) {
        let again = parse_sweep_csv(write_sweep_csv(&records).as_bytes()).expect("written file parses");
        assert_eq!(again, records);
    }
});
