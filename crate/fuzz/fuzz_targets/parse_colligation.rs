#![no_main]

use libfuzzer_sys::fuzz_target;

use crlab_core::json::{colligation_to_json, parse_colligation, parse_colligation_bytes};

fuzz_target!(|data: &[u8]| {
    if let Ok(col) = parse_colligation_bytes(data) {
        let text = colligation_to_json(&col).expect("validated colligation must serialize");
        let back = parse_colligation(&text).expect("canonical form must parse");
        assert_eq!(colligation_to_json(&back).unwrap(), text);
    }
});
