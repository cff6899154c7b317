use std::path::PathBuf;

use serde_json::Value;

/// The workspace `fixtures/` directory.
pub fn dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

pub fn path(name: &str) -> PathBuf {
    dir().join(name)
}

/// Counts in `expected.json`, written by the fixture generator's own
/// reference decomposer.
pub fn expected(corpus: &str, field: &str) -> u64 {
    let raw = std::fs::read_to_string(path("expected.json")).expect("expected.json present");
    let v: Value = serde_json::from_str(&raw).expect("expected.json is JSON");
    v[corpus][field]
        .as_u64()
        .unwrap_or_else(|| panic!("missing {corpus}.{field}"))
}

/// Raw (title, text) pairs from a fixture JSONL file.
pub fn titles_and_texts(name: &str) -> Vec<(String, String)> {
    let raw = std::fs::read_to_string(path(name)).expect("fixture present");
    raw.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            let v: Value = serde_json::from_str(l).expect("fixture line is JSON");
            (
                v["title"].as_str().unwrap().to_owned(),
                v["text"].as_str().unwrap().to_owned(),
            )
        })
        .collect()
}
