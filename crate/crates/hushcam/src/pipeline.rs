//! The four subcommands.
//!
//! Each measurement count uses the first `m` rows of one operator seeded with
//! `operator_seed`, shared by all images, so every image is measured once at
//! the largest count and truncated for the others. Work items run on the
//! rayon pool; results are gathered in input order before anything is
//! written, so outputs do not depend on scheduling. Ingested images are never
//! written out.

use std::collections::HashMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use hushcam_core::classify::{cross_validate, Classifier};
use hushcam_core::dataset::{synth_dataset, Valence};
use hushcam_core::recover::Reconstructor;
use hushcam_core::sensing::{compression_ratio, CompressedSample, SensingOperator, StorageMode};
use hushcam_core::wavelet::Transform2d;
use hushcam_core::{Image, Matrix};
use rayon::prelude::*;

use crate::archive::{
    archive_file_name, decode_samples, encode_samples, ArchiveEntry, ArchiveManifest, ImageRecord,
    MANIFEST_FILE,
};
use crate::config::{DatasetSource, ExperimentConfig};
use crate::error::{Error, ItemFailure, Result};
use crate::ingest::{load_entries, read_label_csv, scan_dir, write_label_csv, Loaded};
use crate::model::encode_mlp;
use crate::raster::{encode, SampleDepth};
use crate::report::{eval_reports_csv, gallery_csv, ExperimentReport, GalleryRow, GalleryRowKind, ReportRow};

/// Writes through a temporary file in the destination directory and renames
/// it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

/// What a command produced. Non-empty `failures` means partial success.
#[derive(Debug, Clone, Default)]
pub struct RunSummary {
    pub written: Vec<PathBuf>,
    pub failures: Vec<ItemFailure>,
}

impl RunSummary {
    fn write(&mut self, path: PathBuf, bytes: &[u8]) -> Result<()> {
        write_atomic(&path, bytes)?;
        self.written.push(path);
        Ok(())
    }
}

/// Identifier of synthetic image `index`, in JAFFE form so file names carry
/// the label (e.g. `SY.HA1.0003`).
pub fn synth_id(index: usize, valence: Valence) -> String {
    format!("SY.{}1.{index:04}", valence.representative().code())
}

pub struct Corpus {
    pub items: Vec<Loaded>,
    pub failures: Vec<ItemFailure>,
    /// True when the images came from disk rather than the generator.
    pub ingested: bool,
}

pub fn load_corpus(cfg: &ExperimentConfig) -> Result<Corpus> {
    let corpus = match &cfg.dataset {
        DatasetSource::Synth { .. } => {
            let spec = cfg.synth_spec().expect("synthetic source");
            let items = synth_dataset(&spec)?
                .into_iter()
                .enumerate()
                .map(|(i, (image, valence))| Loaded {
                    id: synth_id(i, valence),
                    image,
                    valence,
                })
                .collect();
            Corpus {
                items,
                failures: Vec::new(),
                ingested: false,
            }
        }
        DatasetSource::Dir { path, labels } => {
            let (entries, mut failures) = match labels {
                Some(csv) => read_label_csv(csv, &cfg.valence_mapping)?,
                None => scan_dir(path, &cfg.valence_mapping)?,
            };
            let (items, load_failures) = load_entries(&entries, cfg.side, cfg.allow_upsample);
            failures.extend(load_failures);
            if items.is_empty() {
                return Err(Error::format(path, "dataset has no usable images"));
            }
            Corpus {
                items,
                failures,
                ingested: true,
            }
        }
    };
    Ok(corpus)
}

fn transform(cfg: &ExperimentConfig) -> Result<Transform2d> {
    Ok(Transform2d::new(cfg.wavelet_spec()?, cfg.side, cfg.resolved_level()?)?)
}

/// Measurements of every image under the first `max_m` operator rows.
fn measure_all(cfg: &ExperimentConfig, images: &[&Image], max_m: usize) -> Result<Vec<Vec<f64>>> {
    let t = transform(cfg)?;
    let op = SensingOperator::new(max_m, cfg.n(), cfg.operator_seed, StorageMode::Dense)?;
    images
        .par_iter()
        .map(|img| Ok(op.apply(&t.forward(img.pixels())?)?))
        .collect()
}

fn max_m(cfg: &ExperimentConfig) -> usize {
    cfg.m_values.iter().copied().max().unwrap_or(1)
}

pub fn cmd_synth(cfg: &ExperimentConfig) -> Result<RunSummary> {
    let spec = cfg
        .synth_spec()
        .ok_or_else(|| Error::Config("synth needs a synthetic dataset source".into()))?;
    let data = synth_dataset(&spec)?;
    let ext = cfg.image_format.extension();
    let files: Vec<(String, Vec<u8>)> = data
        .par_iter()
        .enumerate()
        .map(|(i, (img, v))| {
            let name = format!("{}.{ext}", synth_id(i, *v));
            (name, encode(img, cfg.image_format, SampleDepth::Sixteen))
        })
        .collect();
    let mut summary = RunSummary::default();
    for (name, bytes) in &files {
        summary.write(cfg.output_dir.join(name), bytes)?;
    }
    let labels: Vec<_> = files
        .iter()
        .zip(&data)
        .map(|((name, _), (_, v))| (name.clone(), v.representative()))
        .collect();
    summary.write(cfg.output_dir.join("labels.csv"), &write_label_csv(&labels))?;
    Ok(summary)
}

pub fn cmd_compress(cfg: &ExperimentConfig) -> Result<RunSummary> {
    let corpus = load_corpus(cfg)?;
    let images: Vec<&Image> = corpus.items.iter().map(|l| &l.image).collect();
    let full = measure_all(cfg, &images, max_m(cfg))?;
    let mut summary = RunSummary {
        failures: corpus.failures,
        ..Default::default()
    };
    let mut archives = Vec::new();
    for &m in &cfg.m_values {
        let samples: Vec<CompressedSample> = full
            .iter()
            .zip(&corpus.items)
            .map(|(y, item)| CompressedSample {
                y: y[..m].to_vec(),
                label: Some(item.valence),
                operator_seed: cfg.operator_seed,
            })
            .collect();
        let file = archive_file_name(m);
        summary.write(cfg.output_dir.join(&file), &encode_samples(&samples))?;
        archives.push(ArchiveEntry {
            m,
            operator_seed: cfg.operator_seed,
            compression_ratio_percent: compression_ratio(m, cfg.n()),
            file,
        });
    }
    let manifest = ArchiveManifest {
        version: 1,
        side: cfg.side,
        wavelet_order: cfg.wavelet,
        level: cfg.resolved_level()?,
        n: cfg.n(),
        archives,
        images: corpus
            .items
            .iter()
            .map(|l| ImageRecord {
                id: l.id.clone(),
                label: l.valence,
            })
            .collect(),
    };
    let mut json = serde_json::to_vec_pretty(&manifest).expect("plain data");
    json.push(b'\n');
    summary.write(cfg.output_dir.join(MANIFEST_FILE), &json)?;
    Ok(summary)
}

/// A compressed archive as written by [`cmd_compress`].
pub struct Archive {
    pub manifest: ArchiveManifest,
    pub samples: HashMap<usize, Vec<CompressedSample>>,
}

pub fn read_archive(dir: &Path) -> Result<Archive> {
    let mpath = dir.join(MANIFEST_FILE);
    let text = std::fs::read(&mpath).map_err(|e| Error::io(&mpath, e))?;
    let manifest: ArchiveManifest =
        serde_json::from_slice(&text).map_err(|e| Error::format(&mpath, e.to_string()))?;
    let mut samples = HashMap::new();
    for entry in &manifest.archives {
        let path = dir.join(&entry.file);
        let bytes = std::fs::read(&path).map_err(|e| Error::io(&path, e))?;
        let s = decode_samples(&bytes).map_err(|e| Error::format(&path, e))?;
        if s.len() != manifest.images.len() || s.iter().any(|x| x.m() != entry.m) {
            return Err(Error::format(&path, "archive does not match its manifest entry"));
        }
        samples.insert(entry.m, s);
    }
    Ok(Archive { manifest, samples })
}

impl Archive {
    fn entry(&self, m: usize) -> Result<&ArchiveEntry> {
        self.manifest
            .archives
            .iter()
            .find(|e| e.m == m)
            .ok_or_else(|| Error::Config(format!("archive has no samples for m={m}")))
    }

    fn check_geometry(&self, cfg: &ExperimentConfig) -> Result<()> {
        let same = self.manifest.side == cfg.side
            && self.manifest.wavelet_order == cfg.wavelet
            && self.manifest.level == cfg.resolved_level()?;
        if same {
            Ok(())
        } else {
            Err(Error::Config(format!(
                "archive was built for side {} db{} level {}, config asks otherwise",
                self.manifest.side, self.manifest.wavelet_order, self.manifest.level
            )))
        }
    }
}

/// Measurements per configured m, with labels, ids and (when known) the
/// original images in the same order.
struct SweepInput {
    by_m: Vec<(usize, u64, Vec<Vec<f64>>)>,
    labels: Vec<Valence>,
    originals: Vec<Option<Image>>,
}

fn sweep_input(cfg: &ExperimentConfig, archive: Option<&Path>) -> Result<(SweepInput, Vec<ItemFailure>)> {
    let need_originals = cfg.psnr_images > 0;
    match archive {
        None => {
            let corpus = load_corpus(cfg)?;
            let images: Vec<&Image> = corpus.items.iter().map(|l| &l.image).collect();
            let full = measure_all(cfg, &images, max_m(cfg))?;
            let by_m = cfg
                .m_values
                .iter()
                .map(|&m| (m, cfg.operator_seed, full.iter().map(|y| y[..m].to_vec()).collect()))
                .collect();
            let input = SweepInput {
                by_m,
                labels: corpus.items.iter().map(|l| l.valence).collect(),
                originals: corpus.items.into_iter().map(|l| Some(l.image)).collect(),
            };
            Ok((input, corpus.failures))
        }
        Some(dir) => {
            let archive = read_archive(dir)?;
            archive.check_geometry(cfg)?;
            let mut by_m = Vec::new();
            for &m in &cfg.m_values {
                let entry = archive.entry(m)?;
                let rows = archive.samples[&m].iter().map(|s| s.y.clone()).collect();
                by_m.push((m, entry.operator_seed, rows));
            }
            let labels: Vec<Valence> = archive.manifest.images.iter().map(|r| r.label).collect();
            let mut originals = vec![None; labels.len()];
            if need_originals {
                let corpus = load_corpus(cfg)?;
                let mut known: HashMap<String, Image> =
                    corpus.items.into_iter().map(|l| (l.id, l.image)).collect();
                for (slot, rec) in originals.iter_mut().zip(&archive.manifest.images) {
                    *slot = known.remove(&rec.id);
                }
            }
            Ok((SweepInput { by_m, labels, originals }, Vec::new()))
        }
    }
}

fn mean_psnr(cfg: &ExperimentConfig, m: usize, seed: u64, rows: &[Vec<f64>], originals: &[Option<Image>]) -> Result<Option<f64>> {
    let picked: Vec<(usize, &Image)> = originals
        .iter()
        .enumerate()
        .filter_map(|(i, o)| o.as_ref().map(|img| (i, img)))
        .take(cfg.psnr_images)
        .collect();
    if picked.is_empty() {
        return Ok(None);
    }
    let op = SensingOperator::new(m, cfg.n(), seed, StorageMode::Dense)?;
    let rec = Reconstructor::new(&op, transform(cfg)?, cfg.solver.clone())?;
    let psnrs = picked
        .par_iter()
        .map(|&(i, img)| {
            let sample = CompressedSample {
                y: rows[i].clone(),
                label: None,
                operator_seed: seed,
            };
            Ok(rec.reconstruct(&sample)?.psnr(img)?)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(Some(psnrs.iter().sum::<f64>() / psnrs.len() as f64))
}

/// Cross-validates the classifier at every configured m and writes the
/// report, the plot series and the per-m evaluation reports.
pub fn cmd_sweep(cfg: &ExperimentConfig, archive: Option<&Path>) -> Result<(ExperimentReport, RunSummary)> {
    let (input, failures) = sweep_input(cfg, archive)?;
    let cls = cfg.classifier_config();
    let results = input
        .by_m
        .par_iter()
        .map(|(m, seed, rows)| {
            let start = Instant::now();
            let x = Matrix::from_rows(rows)?;
            let eval = cross_validate(&cls, &x, &input.labels, cfg.folds, cfg.fold_seed)?;
            let psnr = mean_psnr(cfg, *m, *seed, rows, &input.originals)?;
            let model = if cfg.save_models {
                Some(Classifier::fit(&cls, &x, &input.labels)?)
            } else {
                None
            };
            let row = ReportRow {
                m: *m,
                compression_ratio_percent: compression_ratio(*m, cfg.n()),
                train_accuracy: eval.train_accuracy,
                test_accuracy: eval.accuracy,
                mean_psnr: psnr,
                wall_time_s: start.elapsed().as_secs_f64(),
            };
            Ok((row, eval, model))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut summary = RunSummary {
        failures,
        ..Default::default()
    };
    let mut report = ExperimentReport {
        rows: Vec::new(),
        evals: Vec::new(),
    };
    for (row, eval, model) in results {
        if let Some(model) = model {
            let (name, bytes) = match &model {
                Classifier::Mlp(mlp) => (format!("model_m{:05}.bin", row.m), encode_mlp(mlp)),
                other => (
                    format!("model_m{:05}.json", row.m),
                    serde_json::to_vec_pretty(other).expect("plain data"),
                ),
            };
            summary.write(cfg.output_dir.join("models").join(name), &bytes)?;
        }
        report.evals.push((row.m, eval));
        report.rows.push(row);
    }
    let out = &cfg.output_dir;
    summary.write(out.join("sweep.csv"), &report.to_csv())?;
    summary.write(out.join("accuracy_series.csv"), &report.series_csv())?;
    summary.write(out.join("eval_reports.json"), &report.evals_json())?;
    summary.write(out.join("eval_reports.csv"), &eval_reports_csv(&report.evals))?;
    Ok((report, summary))
}

/// Source of the samples being reconstructed.
struct Target {
    id: String,
    original: Option<Image>,
    /// (m, operator seed, measurements), any order.
    samples: Vec<(usize, u64, Vec<f64>)>,
}

fn reconstruct_targets(
    cfg: &ExperimentConfig,
    archive: Option<&Path>,
    ids: &[String],
    failures: &mut Vec<ItemFailure>,
) -> Result<(Vec<Target>, bool)> {
    let mut ms = cfg.m_values.clone();
    ms.sort_unstable_by(|a, b| b.cmp(a));
    match archive {
        None => {
            let corpus = load_corpus(cfg)?;
            let mut by_id: HashMap<&str, &Loaded> = corpus.items.iter().map(|l| (l.id.as_str(), l)).collect();
            let mut found = Vec::new();
            for id in ids {
                match by_id.remove(id.as_str()) {
                    Some(l) => found.push(l),
                    None => failures.push(ItemFailure::new(id.clone(), "no such image in the dataset")),
                }
            }
            let images: Vec<&Image> = found.iter().map(|l| &l.image).collect();
            let full = measure_all(cfg, &images, ms[0])?;
            let targets = found
                .into_iter()
                .zip(full)
                .map(|(l, y)| Target {
                    id: l.id.clone(),
                    original: Some(l.image.clone()),
                    samples: ms.iter().map(|&m| (m, cfg.operator_seed, y[..m].to_vec())).collect(),
                })
                .collect();
            Ok((targets, corpus.ingested))
        }
        Some(dir) => {
            let archive = read_archive(dir)?;
            archive.check_geometry(cfg)?;
            // Originals are optional here: without them PSNR is left empty.
            let corpus = load_corpus(cfg).ok();
            let ingested = corpus.as_ref().is_none_or(|c| c.ingested);
            let mut originals: HashMap<String, Image> = corpus
                .map(|c| c.items.into_iter().map(|l| (l.id, l.image)).collect())
                .unwrap_or_default();
            let position: HashMap<&str, usize> = archive
                .manifest
                .images
                .iter()
                .enumerate()
                .map(|(i, r)| (r.id.as_str(), i))
                .collect();
            let mut targets = Vec::new();
            for id in ids {
                let Some(&i) = position.get(id.as_str()) else {
                    failures.push(ItemFailure::new(id.clone(), "no such image in the archive"));
                    continue;
                };
                let samples = ms
                    .iter()
                    .map(|&m| Ok((m, archive.entry(m)?.operator_seed, archive.samples[&m][i].y.clone())))
                    .collect::<Result<_>>()?;
                targets.push(Target {
                    id: id.clone(),
                    original: originals.remove(id),
                    samples,
                });
            }
            Ok((targets, ingested))
        }
    }
}

/// Recovers each requested image at every configured m and writes a gallery:
/// per image the original (synthetic sources only), then reconstructions in
/// descending m, plus a sidecar CSV in the same order.
pub fn cmd_reconstruct(cfg: &ExperimentConfig, archive: Option<&Path>, ids: &[String]) -> Result<(Vec<GalleryRow>, RunSummary)> {
    let mut summary = RunSummary::default();
    let ids: Vec<String> = if ids.is_empty() { cfg.reconstruct_ids.clone() } else { ids.to_vec() };
    let gallery_dir = cfg.output_dir.join("gallery");
    let mut rows = Vec::new();
    if ids.is_empty() {
        summary.write(cfg.output_dir.join("gallery.csv"), &gallery_csv(&rows))?;
        return Ok((rows, summary));
    }
    let (targets, ingested) = reconstruct_targets(cfg, archive, &ids, &mut summary.failures)?;
    let t = transform(cfg)?;
    let side = cfg.side;
    let ext = cfg.image_format.extension();

    let mut ms = cfg.m_values.clone();
    ms.sort_unstable_by(|a, b| b.cmp(a));
    // outcomes[m index][target index]
    let mut outcomes = Vec::with_capacity(ms.len());
    for (k, &m) in ms.iter().enumerate() {
        let seed = targets.first().map_or(cfg.operator_seed, |t| t.samples[k].1);
        let op = SensingOperator::new(m, side * side, seed, StorageMode::Dense)?;
        let rec = Reconstructor::new(&op, t.clone(), cfg.solver.clone())?;
        let per_target: Vec<_> = targets
            .par_iter()
            .map(|target| {
                let (_, s, y) = &target.samples[k];
                let sample = CompressedSample {
                    y: y.clone(),
                    label: None,
                    operator_seed: *s,
                };
                let start = Instant::now();
                let r = rec.reconstruct(&sample);
                (r, start.elapsed().as_secs_f64())
            })
            .collect();
        outcomes.push(per_target);
    }

    for (ti, target) in targets.iter().enumerate() {
        let dir = gallery_dir.join(&target.id);
        let mut file = String::new();
        if let (Some(orig), false) = (&target.original, ingested) {
            let path = dir.join(format!("original.{ext}"));
            summary.write(path.clone(), &encode(orig, cfg.image_format, SampleDepth::Eight))?;
            file = relative(&cfg.output_dir, &path);
        }
        rows.push(GalleryRow {
            id: target.id.clone(),
            row: GalleryRowKind::Original,
            m: None,
            psnr: None,
            residual_norm: None,
            l1_norm: None,
            iterations: None,
            wall_time_s: None,
            converged: None,
            file,
        });
        for (k, &m) in ms.iter().enumerate() {
            let (result, wall) = &outcomes[k][ti];
            let recon = match result {
                Ok(r) => r,
                Err(e) => {
                    summary.failures.push(ItemFailure::new(format!("{} m={m}", target.id), e));
                    continue;
                }
            };
            let path = dir.join(format!("m{m:05}.{ext}"));
            summary.write(path.clone(), &encode(&recon.display(), cfg.image_format, SampleDepth::Eight))?;
            let raw: Vec<u8> = recon.raw().pixels().iter().flat_map(|v| v.to_le_bytes()).collect();
            summary.write(dir.join(format!("m{m:05}.f64")), &raw)?;
            let res = &recon.result;
            rows.push(GalleryRow {
                id: target.id.clone(),
                row: GalleryRowKind::Reconstruction,
                m: Some(m),
                psnr: target.original.as_ref().map(|o| recon.psnr(o)).transpose()?,
                residual_norm: Some(res.residual_norm),
                l1_norm: Some(res.l1_norm),
                iterations: Some(res.iterations),
                wall_time_s: Some(*wall),
                converged: Some(res.converged),
                file: relative(&cfg.output_dir, &path),
            });
        }
    }
    summary.write(cfg.output_dir.join("gallery.csv"), &gallery_csv(&rows))?;
    Ok((rows, summary))
}

fn relative(base: &Path, path: &Path) -> String {
    path.strip_prefix(base)
        .unwrap_or(path)
        .to_string_lossy()
        .replace('\\', "/")
}
