//! Fuzzes the stored-report loader behind the `report` subcommand: arbitrary
//! JSON must never panic, and accepted reports must re-serialize.

#![no_main]

use libfuzzer_sys::fuzz_target;

use atr_harness::scenarios::ScenarioReport;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(report) = serde_json::from_str::<ScenarioReport>(text) {
        serde_json::to_string(&report).expect("accepted report re-serializes");
    }
});
