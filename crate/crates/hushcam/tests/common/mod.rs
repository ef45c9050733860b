#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::Path;

use hushcam::ExperimentConfig;
use serde_json::{json, Value};

/// Synthetic-source configuration writing to `out`, with `extra` merged on top.
pub fn synth_config(out: &Path, n_per_class: usize, side: usize, extra: Value) -> ExperimentConfig {
    let mut doc = json!({
        "dataset": {"kind": "synth", "n_per_class": n_per_class, "seed": 7},
        "side": side,
        "operator_seed": 11,
        "fold_seed": 3,
        "model_seed": 5,
        "output_dir": out,
    });
    merge(&mut doc, extra);
    ExperimentConfig::from_value(doc).unwrap()
}

pub fn dir_config(dataset: &Path, out: &Path, side: usize, extra: Value) -> ExperimentConfig {
    let mut doc = json!({
        "dataset": {"kind": "dir", "path": dataset},
        "side": side,
        "operator_seed": 11,
        "fold_seed": 3,
        "model_seed": 5,
        "output_dir": out,
    });
    merge(&mut doc, extra);
    ExperimentConfig::from_value(doc).unwrap()
}

fn merge(doc: &mut Value, extra: Value) {
    if let Value::Object(map) = extra {
        for (k, v) in map {
            doc[k] = v;
        }
    }
}

/// Relative path -> contents of every file under `dir`.
pub fn snapshot(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(dir).unwrap().to_string_lossy().replace('\\', "/");
                out.insert(rel, std::fs::read(&p).unwrap());
            }
        }
    }
    out
}

/// CSV rows as string fields, header included, with the named columns dropped.
pub fn csv_without(bytes: &[u8], drop: &[&str]) -> Vec<Vec<String>> {
    let mut r = csv::ReaderBuilder::new().has_headers(false).from_reader(bytes);
    let rows: Vec<Vec<String>> = r
        .records()
        .map(|rec| rec.unwrap().iter().map(String::from).collect())
        .collect();
    let keep: Vec<usize> = (0..rows[0].len()).filter(|&i| !drop.contains(&rows[0][i].as_str())).collect();
    rows.iter().map(|row| keep.iter().map(|&i| row[i].clone()).collect()).collect()
}
