#![no_main]

use libfuzzer_sys::fuzz_target;

use crlab::config::ConfigFile;

fuzz_target!(|data: &[u8]| {
    // The config-file deserializer (optional fields, renamed `N`, unknown
    // keys rejected by name) must never panic on arbitrary bytes.
    if let Ok(file) = serde_json::from_slice::<ConfigFile>(data) {
        let _ = format!("{file:?}");
    }
});
