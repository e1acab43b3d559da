//! Replays the checked-in fuzz seeds through the same entry points the fuzz
//! targets exercise, so decoder regressions show up without cargo-fuzz.

use std::fs;
use std::path::PathBuf;

use clap::ValueEnum;
use kklab::config::{parse_config, parse_manifest, Command};
use kklab_core::spectral::snapshot::{decode, encode, parse_csv};

fn seeds(target: &str) -> Vec<(String, Vec<u8>)> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus").join(target);
    let mut out: Vec<_> = fs::read_dir(&dir)
        .unwrap_or_else(|e| panic!("{}: {e}", dir.display()))
        .map(|e| {
            let p = e.unwrap().path();
            (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap())
        })
        .collect();
    out.sort();
    assert!(!out.is_empty(), "no seeds for {target}");
    out
}

#[test]
fn snapshot_decode_seeds() {
    let mut accepted = 0;
    for (name, bytes) in seeds("snapshot_decode") {
        if let Ok(snap) = decode(&bytes) {
            assert_eq!(encode(snap.length, snap.t, &snap.u), bytes, "{name}");
            accepted += 1;
        }
    }
    assert_eq!(accepted, 1);
}

#[test]
fn snapshot_csv_seeds() {
    for (name, bytes) in seeds("snapshot_csv") {
        let text = String::from_utf8(bytes).unwrap();
        let parsed = parse_csv(&text);
        if name == "valid.csv" {
            let frames = parsed.unwrap();
            assert_eq!(frames.len(), 1);
        }
    }
}

#[test]
fn config_seeds() {
    for (name, bytes) in seeds("config_parse") {
        let text = String::from_utf8(bytes).unwrap();
        let any_ok = Command::value_variants().iter().any(|&c| parse_config(c, &text).is_ok_and(|(p, _)| p.validate().is_ok()));
        let expect_ok = !matches!(name.as_str(), "invalid.json" | "truncated.json");
        assert_eq!(any_ok, expect_ok, "{name}");
    }
}

#[test]
fn manifest_seeds() {
    for (name, bytes) in seeds("manifest_parse") {
        let text = String::from_utf8(bytes).unwrap();
        assert_eq!(parse_manifest(&text).is_ok(), name != "partial.json", "{name}");
    }
}
