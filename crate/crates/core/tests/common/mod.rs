#![allow(dead_code)]

use finite_gap::algebra::RationalExpr;
use std::path::PathBuf;

pub fn fixture_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests").join("fixtures").join(name)
}

/// Rows of `;`-separated expressions, skipping `#` comments.
pub fn load_matrix(name: &str) -> Vec<Vec<RationalExpr>> {
    let text = std::fs::read_to_string(fixture_path(name)).expect("fixture file");
    text.lines()
        .filter(|l| !l.trim().is_empty() && !l.starts_with('#'))
        .map(|l| l.split(';').map(|e| RationalExpr::parse(e.trim()).unwrap_or_else(|| panic!("bad entry {e}"))).collect())
        .collect()
}

/// Raw `;`-separated records.
pub fn load_records(name: &str) -> Vec<Vec<String>> {
    let text = std::fs::read_to_string(fixture_path(name)).expect("fixture file");
    text.lines()
        .filter(|l| !l.trim().is_empty() && !l.starts_with('#'))
        .map(|l| l.split(';').map(|e| e.trim().to_string()).collect())
        .collect()
}
