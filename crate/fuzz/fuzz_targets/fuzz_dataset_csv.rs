#![no_main]

use std::sync::OnceLock;

use cadmine::config::DatasetConfig;
use cadmine::dataset::read_dataset;
use cadmine::profiling::discretize_dataset;
use libfuzzer_sys::fuzz_target;

fn config() -> &'static DatasetConfig {
    static CFG: OnceLock<DatasetConfig> = OnceLock::new();
    CFG.get_or_init(|| {
        include_str!("../../crates/core/config/zalizadeh.profiles")
            .parse()
            .expect("shipped config parses")
    })
}

fuzz_target!(|data: &[u8]| {
    let cfg = config();
    if let Ok(raw) = read_dataset(data, &cfg.schema) {
        // anything that loads must discretize or fail cleanly
        let _ = discretize_dataset(&raw, &cfg.profiles, &cfg.ranges);
    }
});
