//! Fuzzes the line-delimited trace parser: arbitrary bytes must never panic,
//! and anything that parses must survive a serialize/parse round trip
//! unchanged.

#![no_main]

use libfuzzer_sys::fuzz_target;

use atr_core::trace::{parse_trace_str, records_to_string};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(records) = parse_trace_str(text) {
        // Round trip: records that validated must re-serialize and re-parse
        // to the identical value.
        let serialized = records_to_string(&records).expect("parsed records serialize");
        let reparsed = parse_trace_str(&serialized).expect("serialized records parse");
        assert_eq!(reparsed, records);
    }
});
