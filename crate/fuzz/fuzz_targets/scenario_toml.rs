#![no_main]

use libfuzzer_sys::fuzz_target;
use vvlc::sim::ScenarioConfig;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(s) = ScenarioConfig::from_toml(text) {
        let again = ScenarioConfig::from_toml(&s.to_toml()).expect("serialized scenario parses");
        // NaN-free scenarios must round-trip exactly
        if s == s {
            assert_eq!(again, s);
        }
    }
});
