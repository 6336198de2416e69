#![allow(dead_code)]

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

/// A few thousand Rössler steps, a handful of epochs and two grid cells.
pub const TINY: &str = r#"{
  // small enough for a debug build
  "system": {"kind": "rossler"},
  "integration": {"total_steps": 4000, "transient_steps": 1000},
  "train": {"epochs": 2, "seed": 3},
  "alpha_grid": [1e-3, 1e-6],
  "window_grid": [9, 12],
  "lle": {"repeats": 2, "horizon_steps": 1500,
          "targets": [{"system": {"kind": "rossler"}, "coordinates": [0, 2]}]}
}"#;

pub fn write_config(dir: &Path, text: &str) -> PathBuf {
    let path = dir.join("config.json");
    fs::write(&path, text).unwrap();
    path
}

pub fn chaosae(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_chaosae"))
        .args(args)
        .current_dir(dir)
        .env_remove("CHAOSAE_OUTPUT_DIR")
        .output()
        .expect("binary runs")
}

pub fn ok(out: &Output) {
    assert!(out.status.success(), "exit {:?}\nstderr:\n{}", out.status.code(), String::from_utf8_lossy(&out.stderr));
}

/// Every file under `root`, relative path and contents, sorted by path.
pub fn snapshot(root: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut files = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in fs::read_dir(&dir).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                files.push((p.strip_prefix(root).unwrap().to_path_buf(), fs::read(&p).unwrap()));
            }
        }
    }
    files.sort();
    files
}

/// Runs every stage of the pipeline into `out` under `dir`.
pub fn full_pipeline(dir: &Path, out: &str) {
    let cfg = write_config(dir, TINY);
    let cfg = cfg.to_str().unwrap();
    for args in [
        vec!["simulate"],
        vec!["train"],
        vec!["sweep", "--mode", "alpha"],
        vec!["sweep", "--mode", "window"],
        vec!["lle", "--mode", "input"],
        vec!["lle", "--mode", "reconstructed", "--grid", "alpha"],
        vec!["lle", "--mode", "reconstructed", "--grid", "window"],
        vec!["report"],
    ] {
        let mut a = args.clone();
        a.extend(["--config", cfg, "--out", out, "-q"]);
        ok(&chaosae(&a, dir));
    }
}
