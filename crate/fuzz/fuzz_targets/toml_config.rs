#![no_main]

use adasa_bench::ExperimentConfig;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(src) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(cfg) = ExperimentConfig::from_toml_str(src) {
        let _ = cfg.validate();
        if let Ok(out) = cfg.to_toml_string() {
            let back =
                ExperimentConfig::from_toml_str(&out).expect("re-parse of serialized config");
            assert_eq!(cfg, back);
        }
    }
});
