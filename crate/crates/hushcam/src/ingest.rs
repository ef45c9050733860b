//! Dataset manifests and image loading.
//!
//! A dataset is either a directory of JAFFE-named rasters, labelled from the
//! file name, or a CSV of `path,expression` rows with paths relative to the
//! CSV file.

use std::path::{Path, PathBuf};

use hushcam_core::dataset::{map_valence, parse_jaffe_label, Expression, Valence, ValenceMapping};
use hushcam_core::{preprocess, Image};
use rayon::prelude::*;

use crate::error::{Error, ItemFailure, Result};
use crate::raster::{load_image, ImageFormat};

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetEntry {
    /// File stem, e.g. `KA.HA2.30`.
    pub id: String,
    pub path: PathBuf,
    pub expression: Expression,
    pub valence: Valence,
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

/// PGM and PNG files of `dir` in file-name order. Files whose names carry no
/// expression code are reported and skipped.
pub fn scan_dir(dir: &Path, mapping: &ValenceMapping) -> Result<(Vec<DatasetEntry>, Vec<ItemFailure>)> {
    let read = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut paths = Vec::new();
    for entry in read {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        let known = path
            .extension()
            .and_then(|e| e.to_str())
            .and_then(ImageFormat::from_extension)
            .is_some();
        if known && path.is_file() {
            paths.push(path);
        }
    }
    paths.sort();
    let mut entries = Vec::new();
    let mut failures = Vec::new();
    for path in paths {
        let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        match parse_jaffe_label(&name) {
            Ok(expression) => entries.push(DatasetEntry {
                id: stem(&path),
                valence: map_valence(expression, mapping),
                expression,
                path,
            }),
            Err(e) => failures.push(ItemFailure::new(name, e)),
        }
    }
    Ok((entries, failures))
}

#[derive(serde::Deserialize)]
struct LabelRow {
    path: PathBuf,
    expression: String,
}

/// Reads `path,expression` rows. Rows are kept in file order.
pub fn read_label_csv(csv_path: &Path, mapping: &ValenceMapping) -> Result<(Vec<DatasetEntry>, Vec<ItemFailure>)> {
    let base = csv_path.parent().unwrap_or(Path::new("."));
    let mut reader = csv::Reader::from_path(csv_path).map_err(|e| Error::format(csv_path, e.to_string()))?;
    let mut entries = Vec::new();
    let mut failures = Vec::new();
    for (line, row) in reader.deserialize::<LabelRow>().enumerate() {
        let row = row.map_err(|e| Error::format(csv_path, e.to_string()))?;
        match Expression::from_code(row.expression.trim()) {
            Ok(expression) => entries.push(DatasetEntry {
                id: stem(&row.path),
                path: base.join(&row.path),
                valence: map_valence(expression, mapping),
                expression,
            }),
            Err(e) => failures.push(ItemFailure::new(format!("{}:{}", csv_path.display(), line + 2), e)),
        }
    }
    Ok((entries, failures))
}

pub fn write_label_csv(rows: &[(String, Expression)]) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["path", "expression"]).expect("in-memory csv");
    for (path, e) in rows {
        w.write_record([path.as_str(), e.code()]).expect("in-memory csv");
    }
    w.into_inner().expect("in-memory csv")
}

/// A preprocessed image ready for encoding.
#[derive(Debug, Clone)]
pub struct Loaded {
    pub id: String,
    pub image: Image,
    pub valence: Valence,
}

/// Loads and preprocesses every entry, in parallel, keeping input order.
/// Unreadable or unusable files are returned as failures.
pub fn load_entries(
    entries: &[DatasetEntry],
    side: usize,
    allow_upsample: bool,
) -> (Vec<Loaded>, Vec<ItemFailure>) {
    let results: Vec<Result<Loaded, ItemFailure>> = entries
        .par_iter()
        .map(|e| {
            let fail = |err: &dyn std::fmt::Display| ItemFailure::new(e.path.display().to_string(), err);
            let raw = load_image(&e.path).map_err(|err| fail(&err))?;
            let image = preprocess(&raw, side, allow_upsample).map_err(|err| fail(&err))?;
            Ok(Loaded {
                id: e.id.clone(),
                image,
                valence: e.valence,
            })
        })
        .collect();
    let mut loaded = Vec::new();
    let mut failures = Vec::new();
    for r in results {
        match r {
            Ok(l) => loaded.push(l),
            Err(f) => failures.push(f),
        }
    }
    (loaded, failures)
}
