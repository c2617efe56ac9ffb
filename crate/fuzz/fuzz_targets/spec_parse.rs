//! Fuzzes the TOML experiment-spec parser: arbitrary input must never panic,
//! and accepted specs must round-trip through their own serialization.

#![no_main]

use libfuzzer_sys::fuzz_target;

use atr_harness::spec::ExperimentSpec;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(spec) = ExperimentSpec::parse_toml(text) {
        let serialized = spec.to_toml();
        let reparsed = ExperimentSpec::parse_toml(&serialized).expect("accepted spec round-trips");
        assert_eq!(reparsed, spec);
    }
});
