#![no_main]

use libfuzzer_sys::fuzz_target;

use crlab_core::json::{parse_space, parse_space_bytes, space_to_json};

fuzz_target!(|data: &[u8]| {
    // Parsing must never panic; whatever it accepts must serialize back to
    // a stable canonical form.
    if let Ok(space) = parse_space_bytes(data) {
        let text = space_to_json(&space).expect("validated space must serialize");
        let back = parse_space(&text).expect("canonical form must parse");
        assert_eq!(space_to_json(&back).unwrap(), text);
    }
});
