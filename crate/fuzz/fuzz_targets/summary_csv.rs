#![no_main]

use adasa_bench::summary::parse_summary;
use adasa_bench::SUMMARY_COLUMNS;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let _ = parse_summary(data, &[]);
    let _ = parse_summary(data, &SUMMARY_COLUMNS);
});
