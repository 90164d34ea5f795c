#![allow(dead_code)]

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use stagewise::simlab::{replicate_data, ScenarioSpec};
use stagewise::Family;

pub fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_stagewise"));
    c.arg("--quiet");
    c
}

/// Runs the tool in `dir` and returns its output.
pub fn run(dir: &Path, args: &[&str]) -> Output {
    bin().current_dir(dir).args(args).output().expect("spawn stagewise")
}

pub fn run_ok(dir: &Path, args: &[&str]) -> Output {
    let out = run(dir, args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    out
}

/// Writes a simulated data set with response `y` and covariates `x1..`.
pub fn write_sim_csv(path: &Path, family: Family, nobs: usize, nnoise: usize, seed: u64) {
    let spec = ScenarioSpec { family, nobs, nnoise, seed, n_valid: 10, ..ScenarioSpec::default() };
    let (_, train, _) = replicate_data(&spec, 0).unwrap();
    let mut text = format!("y,{}\n", train.names.join(","));
    for (y, row) in train.y.iter().zip(train.raw.rows()) {
        text.push_str(&y.to_string());
        for v in row {
            text.push(',');
            text.push_str(&v.to_string());
        }
        text.push('\n');
    }
    fs::write(path, text).unwrap();
}

/// Data rows of a CSV artifact, skipping the `#` header line.
pub fn csv_rows(text: &str) -> Vec<Vec<String>> {
    text.lines().filter(|l| !l.starts_with('#')).map(|l| l.split(',').map(str::to_string).collect()).collect()
}

pub fn read_json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}
