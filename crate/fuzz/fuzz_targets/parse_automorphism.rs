#![no_main]

use libfuzzer_sys::fuzz_target;

use crlab_core::json::{automorphism_to_json, parse_automorphism, parse_automorphism_bytes};

fuzz_target!(|data: &[u8]| {
    if let Ok(theta) = parse_automorphism_bytes(data) {
        let text = automorphism_to_json(&theta).expect("validated automorphism must serialize");
        let back = parse_automorphism(&text).expect("canonical form must parse");
        assert_eq!(automorphism_to_json(&back).unwrap(), text);
    }
});
