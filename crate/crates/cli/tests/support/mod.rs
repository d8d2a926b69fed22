#![allow(dead_code)]

#[path = "../../../core/tests/common/mod.rs"]
pub mod common;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub const COLLECTIONS: [&str; 5] = ["A", "B", "C", "DEV", "TEST"];

pub fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_metriclab"))
}

pub fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn metriclab")
}

pub fn code(out: &Output) -> i32 {
    out.status.code().unwrap_or(-1)
}

/// Writes five synthetic collections and an experiment manifest under
/// `root`; returns the manifest path.
pub fn write_experiment(root: &Path, seed: u64, run_len: usize) -> PathBuf {
    let mut rng = common::rng(seed);
    let mut collections = serde_json::Map::new();
    for id in COLLECTIONS {
        let (qrels, runs) = common::random_collection(&mut rng, 14, 12, run_len, 8);
        let dir = root.join(id);
        let runs_dir = dir.join("runs");
        fs::create_dir_all(&runs_dir).unwrap();
        fs::write(dir.join("qrels.txt"), qrels).unwrap();
        // one file per system, as TREC distributes them
        let mut by_tag: std::collections::BTreeMap<String, String> = Default::default();
        for line in runs.lines() {
            let tag = line.rsplit(' ').next().unwrap().to_string();
            let e = by_tag.entry(tag).or_default();
            e.push_str(line);
            e.push('\n');
        }
        for (tag, text) in by_tag {
            fs::write(runs_dir.join(format!("input.{tag}")), text).unwrap();
        }
        collections.insert(
            id.to_string(),
            serde_json::json!({ "runs_dir": format!("{id}/runs"), "qrels_path": format!("{id}/qrels.txt") }),
        );
    }
    let manifest = serde_json::json!({
        "collections": collections,
        "split": { "train": ["A", "B", "C"], "dev": "DEV", "test": ["TEST"] },
    });
    let path = root.join("experiment.json");
    fs::write(&path, serde_json::to_string_pretty(&manifest).unwrap()).unwrap();
    path
}

/// Every regular file under `dir`, relative path → contents.
pub fn snapshot(dir: &Path) -> std::collections::BTreeMap<PathBuf, Vec<u8>> {
    let mut out = std::collections::BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.insert(p.strip_prefix(dir).unwrap().to_path_buf(), fs::read(&p).unwrap());
            }
        }
    }
    out
}
