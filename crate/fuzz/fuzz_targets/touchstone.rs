#![no_main]

use libfuzzer_sys::fuzz_target;
use vvlc::measurement::{parse_touchstone, write_touchstone};

fuzz_target!(|data: &[u8]| {
    if let Ok(records) = parse_touchstone(data) {
        for r in &records {
            let again = parse_touchstone(write_touchstone(r).as_bytes()).expect("written file parses");
            assert_eq!(&again[0], r);
        }
    }
});
