#![no_main]

use heatlab_cli::ExperimentConfig;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(cfg) = ExperimentConfig::from_toml(text) else { return };
    // NaN never compares equal; every other accepted config must survive a round trip.
    if let Ok(again) = cfg.to_toml() {
        let back = ExperimentConfig::from_toml(&again).expect("re-serialized config parses");
        if !again.contains("nan") {
            assert_eq!(back, cfg);
        }
    }
    let _ = cfg.kernels();
});
