#![no_main]

use std::sync::OnceLock;

use cadmine::binarize::{binarize_dataset, read_discretized_csv};
use cadmine::config::DatasetConfig;
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
    let schema = &config().schema;
    if let Ok(records) = read_discretized_csv(data, schema) {
        let _ = binarize_dataset(&records, schema);
    }
});
