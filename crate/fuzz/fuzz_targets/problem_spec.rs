#![no_main]

use adasa_core::problems::ProblemSpec;
use libfuzzer_sys::fuzz_target;

// Parsed specs either build or return an error; building never panics.
fuzz_target!(|data: &[u8]| {
    let Ok(src) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(spec) = toml::from_str::<ProblemSpec>(src) {
        if let Ok(p) = spec.build() {
            let _ = p.meta();
        }
    }
});
