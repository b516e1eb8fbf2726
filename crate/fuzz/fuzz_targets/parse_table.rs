#![no_main]

use libfuzzer_sys::fuzz_target;

use crlab_core::json::{parse_table, parse_table_bytes, table_to_json};

fuzz_target!(|data: &[u8]| {
    if let Ok(table) = parse_table_bytes(data) {
        let text = table_to_json(&table).expect("validated table must serialize");
        let back = parse_table(&text).expect("canonical form must parse");
        assert_eq!(back.out_dim(), table.out_dim());
        assert_eq!(back.in_dim(), table.in_dim());
        assert_eq!(table_to_json(&back).unwrap(), text);
    }
});
