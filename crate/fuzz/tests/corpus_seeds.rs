//! Every checked-in corpus seed must parse: a seed that the target rejects
//! starts the fuzzer in dead corners of the input space.

use std::path::Path;

fn seeds(target: &str) -> Vec<(String, Vec<u8>)> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("corpus").join(target);
    let mut out: Vec<(String, Vec<u8>)> = std::fs::read_dir(&dir)
        .unwrap_or_else(|e| panic!("corpus dir {}: {e}", dir.display()))
        .map(|entry| {
            let path = entry.unwrap().path();
            let name = path.file_name().unwrap().to_string_lossy().into_owned();
            (name, std::fs::read(&path).unwrap())
        })
        .collect();
    out.sort();
    assert!(!out.is_empty(), "no seeds for {target}");
    out
}

#[test]
fn space_seeds_parse() {
    for (name, bytes) in seeds("parse_space") {
        crlab_core::json::parse_space_bytes(&bytes)
            .unwrap_or_else(|e| panic!("{name}: {e}"));
    }
}

#[test]
fn table_seeds_parse() {
    for (name, bytes) in seeds("parse_table") {
        crlab_core::json::parse_table_bytes(&bytes)
            .unwrap_or_else(|e| panic!("{name}: {e}"));
    }
}

#[test]
fn automorphism_seeds_parse() {
    for (name, bytes) in seeds("parse_automorphism") {
        crlab_core::json::parse_automorphism_bytes(&bytes)
            .unwrap_or_else(|e| panic!("{name}: {e}"));
    }
}

#[test]
fn colligation_seeds_parse() {
    for (name, bytes) in seeds("parse_colligation") {
        crlab_core::json::parse_colligation_bytes(&bytes)
            .unwrap_or_else(|e| panic!("{name}: {e}"));
    }
}

#[test]
fn config_seeds_parse() {
    for (name, bytes) in seeds("parse_config") {
        serde_json::from_slice::<crlab::config::ConfigFile>(&bytes)
            .unwrap_or_else(|e| panic!("{name}: {e}"));
    }
}
