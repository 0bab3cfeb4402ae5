#![no_main]

use adasa_core::data::{parse_libsvm, to_libsvm};
use libfuzzer_sys::fuzz_target;

// Anything that parses must survive a write/parse round trip unchanged.
fuzz_target!(|data: &[u8]| {
    if let Ok(ds) = parse_libsvm(data) {
        let again = parse_libsvm(to_libsvm(&ds).as_bytes()).expect("re-parse of written output");
        assert_eq!(ds, again);
    }
});
