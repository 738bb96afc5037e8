#![no_main]

use libfuzzer_sys::fuzz_target;
use qshrink_cli::RunConfig;

fuzz_target!(|data: &[u8]| {
    let Ok(cfg) = serde_json::from_slice::<RunConfig>(data) else {
        return;
    };
    if cfg.validate().is_err() {
        return;
    }
    let text = serde_json::to_string(&cfg).expect("serialize");
    let back: RunConfig = serde_json::from_str(&text).expect("reparse");
    assert_eq!(serde_json::to_string(&back).expect("serialize"), text);
});
