//! Shared helpers for the integration and acceptance suites.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_robust-ik")
}

pub fn robot_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("robots").join(name)
}

pub fn run_cli(args: &[&str]) -> Output {
    Command::new(bin()).args(args).output().expect("binary runs")
}

pub fn temp_path(tag: &str) -> PathBuf {
    std::env::temp_dir().join(format!("robust-ik-test-{}-{tag}", std::process::id()))
}

/// Parses a named column of floats out of a CSV string.
pub fn csv_column(csv: &str, name: &str) -> Vec<f64> {
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().expect("header").split(',').collect();
    let idx = header.iter().position(|h| *h == name).unwrap_or_else(|| {
        panic!("column {name} not in header {header:?}");
    });
    lines
        .filter(|l| !l.trim().is_empty())
        .map(|l| l.split(',').nth(idx).unwrap().parse::<f64>().unwrap())
        .collect()
}

#[allow(dead_code)]
pub fn report_line(criterion: u32, name: &str, pass: bool, detail: &str) {
    println!(
        "acceptance criterion {criterion}: {} — {name} ({detail})",
        if pass { "PASS" } else { "FAIL" }
    );
}
