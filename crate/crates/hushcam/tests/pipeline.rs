mod common;

use common::{csv_without, dir_config, snapshot, synth_config};
use hushcam::archive::{decode_samples, ArchiveManifest};
use hushcam::ingest::{read_label_csv, scan_dir};
use hushcam::pipeline::{cmd_compress, cmd_reconstruct, cmd_sweep, cmd_synth, load_corpus, synth_id};
use hushcam::raster::{encode, ImageFormat, SampleDepth};
use hushcam::report::GalleryRowKind;
use hushcam_core::dataset::{synth_dataset, ValenceMapping};
use hushcam_core::sensing::{compress_image, gen_operator};
use hushcam_core::wavelet::WaveletSpec;
use hushcam_core::Image;
use serde_json::json;

#[test]
fn synth_writes_files_and_labels_deterministically() {
    let out = tempfile::tempdir().unwrap();
    let cfg = synth_config(out.path(), 5, 32, json!({}));
    let summary = cmd_synth(&cfg).unwrap();
    assert_eq!(summary.written.len(), 16);
    let files = snapshot(out.path());
    assert_eq!(files.keys().filter(|k| k.ends_with(".png")).count(), 15);
    let labels = String::from_utf8(files["labels.csv"].clone()).unwrap();
    assert_eq!(labels.lines().count(), 16);
    assert_eq!(labels.lines().next().unwrap(), "path,expression");

    let again = tempfile::tempdir().unwrap();
    cmd_synth(&synth_config(again.path(), 5, 32, json!({}))).unwrap();
    assert_eq!(snapshot(again.path()), files);
}

#[test]
fn synth_labels_round_trip_through_ingestion() {
    let out = tempfile::tempdir().unwrap();
    let cfg = synth_config(out.path(), 4, 16, json!({"image_format": "pgm", "m_values": [10]}));
    cmd_synth(&cfg).unwrap();
    let truth: Vec<_> = synth_dataset(&cfg.synth_spec().unwrap()).unwrap();
    let mapping = ValenceMapping::default();
    let (scanned, failed) = scan_dir(out.path(), &mapping).unwrap();
    assert!(failed.is_empty());
    let (listed, failed) = read_label_csv(&out.path().join("labels.csv"), &mapping).unwrap();
    assert!(failed.is_empty());
    assert_eq!(scanned.len(), 12);
    // Ids sort in generation order because the index is the last token.
    let mut by_index = listed.clone();
    by_index.sort_by(|a, b| a.id.rsplit('.').next().cmp(&b.id.rsplit('.').next()));
    for (i, ((_, v), e)) in truth.iter().zip(&by_index).enumerate() {
        assert_eq!(e.valence, *v);
        assert_eq!(e.id, synth_id(i, *v));
    }
    let mut scanned_ids: Vec<_> = scanned.iter().map(|e| (e.id.clone(), e.valence)).collect();
    let mut listed_ids: Vec<_> = listed.iter().map(|e| (e.id.clone(), e.valence)).collect();
    scanned_ids.sort();
    listed_ids.sort();
    assert_eq!(scanned_ids, listed_ids);

    // Pixels survive the 16-bit round trip to within one code.
    let dir = dir_config(out.path(), out.path(), 16, json!({"m_values": [10]}));
    let corpus = load_corpus(&dir).unwrap();
    for item in &corpus.items {
        let i: usize = item.id.rsplit('.').next().unwrap().parse().unwrap();
        for (a, b) in item.image.pixels().iter().zip(truth[i].0.pixels()) {
            assert!((a - b).abs() <= 0.5 / 65535.0 + 1e-12);
        }
    }
}

#[test]
fn compress_cardinality_and_byte_identical_rerun() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        cmd_compress(&synth_config(d.path(), 2, 32, json!({"m_values": [10]}))).unwrap();
    }
    let files = snapshot(a.path());
    assert_eq!(files, snapshot(b.path()));
    assert_eq!(files.len(), 2);
    let samples = decode_samples(&files["samples_m00010.bin"]).unwrap();
    assert_eq!(samples.len(), 6);
    assert!(samples.iter().all(|s| s.m() == 10 && s.operator_seed == 11 && s.label.is_some()));
}

#[test]
fn truncated_measurements_equal_direct_compression() {
    let out = tempfile::tempdir().unwrap();
    let cfg = synth_config(out.path(), 1, 32, json!({"m_values": [40, 7, 300]}));
    cmd_compress(&cfg).unwrap();
    let images = synth_dataset(&cfg.synth_spec().unwrap()).unwrap();
    let spec = WaveletSpec::default();
    let level = cfg.resolved_level().unwrap();
    for m in [7usize, 40, 300] {
        let bytes = std::fs::read(out.path().join(format!("samples_m{m:05}.bin"))).unwrap();
        let op = gen_operator(m, 1024, 11).unwrap();
        for (s, (img, v)) in decode_samples(&bytes).unwrap().iter().zip(&images) {
            let direct = compress_image(img, &spec, level, &op).unwrap();
            assert_eq!(s.y, direct.y, "m={m}");
            assert_eq!(s.label, Some(*v));
        }
    }
    let manifest: ArchiveManifest =
        serde_json::from_slice(&std::fs::read(out.path().join("manifest.json")).unwrap()).unwrap();
    let order: Vec<usize> = manifest.archives.iter().map(|e| e.m).collect();
    assert_eq!(order, vec![40, 7, 300]);
}

#[test]
fn manifest_ratios_match_the_reference_table() {
    // Printed compression-ratio column for 128x128 images.
    let table = [
        (800, 4.89),
        (500, 3.05),
        (200, 1.22),
        (100, 0.61),
        (50, 0.31),
        (20, 0.12),
        (10, 0.06),
        (5, 0.03),
        (2, 0.01),
        (1, 0.006),
    ];
    let out = tempfile::tempdir().unwrap();
    cmd_compress(&synth_config(out.path(), 1, 128, json!({}))).unwrap();
    let manifest: ArchiveManifest =
        serde_json::from_slice(&std::fs::read(out.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest.archives.len(), 10);
    for (entry, (m, printed)) in manifest.archives.iter().zip(table) {
        assert_eq!(entry.m, m);
        assert_eq!(entry.compression_ratio_percent, 100.0 * m as f64 / 16384.0);
        assert!((entry.compression_ratio_percent - printed).abs() < 0.01, "m={m}");
    }
}

/// Three JAFFE-named files plus one unreadable and one unlabelled file.
fn messy_directory(dir: &std::path::Path) {
    let img = Image::filled(40, 40, 0.25);
    for name in ["KA.HA1.1.png", "KA.NE1.2.pgm", "KA.SA1.3.png"] {
        let fmt = ImageFormat::from_extension(name.rsplit('.').next().unwrap()).unwrap();
        std::fs::write(dir.join(name), encode(&img, fmt, SampleDepth::Eight)).unwrap();
    }
    std::fs::write(dir.join("KA.AN1.4.png"), b"not an image").unwrap();
    std::fs::write(dir.join("portrait.png"), encode(&img, ImageFormat::Png, SampleDepth::Eight)).unwrap();
    std::fs::write(dir.join("notes.txt"), b"ignored").unwrap();
}

#[test]
fn per_file_errors_do_not_stop_the_batch_and_faces_stay_private() {
    let data = tempfile::tempdir().unwrap();
    messy_directory(data.path());
    let out = tempfile::tempdir().unwrap();
    let cfg = dir_config(data.path(), out.path(), 32, json!({"m_values": [20, 5]}));
    let summary = cmd_compress(&cfg).unwrap();
    let failed: Vec<&str> = summary.failures.iter().map(|f| f.item.as_str()).collect();
    assert_eq!(failed.len(), 2, "{failed:?}");
    assert!(failed.iter().any(|f| f.contains("portrait")));
    assert!(failed.iter().any(|f| f.contains("KA.AN1.4")));
    let manifest: ArchiveManifest =
        serde_json::from_slice(&std::fs::read(out.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest.images.len(), 3);

    let (rows, _) = cmd_reconstruct(&cfg, Some(out.path()), &["KA.HA1.1".into()]).unwrap();
    assert_eq!(rows[0].row, GalleryRowKind::Original);
    assert_eq!(rows[0].file, "");
    for name in snapshot(out.path()).keys() {
        let ext = name.rsplit('.').next().unwrap();
        assert!(!name.contains("original"), "{name}");
        assert!(["bin", "json", "csv", "png", "f64"].contains(&ext), "{name}");
        if ext == "png" {
            assert!(name.starts_with("gallery/") && name.contains("/m000"), "{name}");
        }
    }
}

#[test]
fn sweep_rows_follow_the_configured_counts() {
    let out = tempfile::tempdir().unwrap();
    let cfg = synth_config(
        out.path(),
        6,
        32,
        json!({"m_values": [30, 1, 8], "classifier": {"kind": "knn", "k": 3}, "folds": 3}),
    );
    let (report, _) = cmd_sweep(&cfg, None).unwrap();
    let ms: Vec<usize> = report.rows.iter().map(|r| r.m).collect();
    assert_eq!(ms, vec![30, 1, 8]);
    for r in &report.rows {
        assert_eq!(r.compression_ratio_percent, 100.0 * r.m as f64 / 1024.0);
        assert!(r.mean_psnr.is_none());
    }
    let csv = std::fs::read(out.path().join("sweep.csv")).unwrap();
    assert_eq!(csv_without(&csv, &[]).len(), 4);
    let series = csv_without(&std::fs::read(out.path().join("accuracy_series.csv")).unwrap(), &[]);
    let order: Vec<&str> = series[1..].iter().map(|r| r[0].as_str()).collect();
    assert_eq!(order, vec!["1", "8", "30"]);

    // Same numbers from the archive.
    let arch = tempfile::tempdir().unwrap();
    let mut from_archive = cfg.clone();
    from_archive.output_dir = arch.path().to_path_buf();
    cmd_compress(&from_archive).unwrap();
    let (again, _) = cmd_sweep(&from_archive, Some(arch.path())).unwrap();
    for (a, b) in report.rows.iter().zip(&again.rows) {
        assert_eq!((a.m, a.train_accuracy, a.test_accuracy), (b.m, b.train_accuracy, b.test_accuracy));
    }
    assert_eq!(report.evals, again.evals);
}

#[test]
fn sweep_is_deterministic_apart_from_wall_time() {
    let run = || {
        let out = tempfile::tempdir().unwrap();
        let cfg = synth_config(
            out.path(),
            5,
            16,
            json!({
                "m_values": [40, 4],
                "classifier": {"kind": "mlp", "hidden_layers": [8], "epochs": 30},
                "folds": 3,
                "psnr_images": 1,
                "save_models": true,
            }),
        );
        cmd_sweep(&cfg, None).unwrap();
        let mut files = snapshot(out.path());
        let sweep = files.remove("sweep.csv").unwrap();
        (files, csv_without(&sweep, &["wall_time_s"]))
    };
    let (a, sa) = run();
    let (b, sb) = run();
    assert_eq!(sa, sb);
    assert_eq!(a, b);
    assert!(a.contains_key("models/model_m00040.bin"));
    assert!(!sa[1][4].is_empty(), "psnr column filled");
}

#[test]
fn gallery_order_metrics_and_edge_cases() {
    let out = tempfile::tempdir().unwrap();
    let cfg = synth_config(out.path(), 1, 16, json!({"m_values": [20, 256, 100]}));
    let ids = vec![synth_id(0, hushcam_core::dataset::Valence::Positive), "SY.XX1.9999".to_string()];
    let (rows, summary) = cmd_reconstruct(&cfg, None, &ids).unwrap();
    assert_eq!(summary.failures.len(), 1);
    assert_eq!(summary.failures[0].item, "SY.XX1.9999");
    let kinds: Vec<(GalleryRowKind, Option<usize>)> = rows.iter().map(|r| (r.row, r.m)).collect();
    assert_eq!(
        kinds,
        vec![
            (GalleryRowKind::Original, None),
            (GalleryRowKind::Reconstruction, Some(256)),
            (GalleryRowKind::Reconstruction, Some(100)),
            (GalleryRowKind::Reconstruction, Some(20)),
        ]
    );
    assert!(rows[1].psnr.unwrap() > 60.0, "square system: {:?}", rows[1].psnr);
    assert!(rows[1].converged.unwrap());
    // Synthetic originals are not faces and are written for the gallery.
    assert!(out.path().join(&rows[0].file).is_file());
    let raw = std::fs::read(out.path().join(format!("gallery/{}/m00256.f64", ids[0]))).unwrap();
    assert_eq!(raw.len(), 256 * 8);
    let sidecar = csv_without(&std::fs::read(out.path().join("gallery.csv")).unwrap(), &[]);
    assert_eq!(
        sidecar[0],
        ["id", "row", "m", "psnr", "residual_norm", "l1_norm", "iterations", "wall_time_s", "converged", "file"]
    );
    assert_eq!(sidecar.len(), 5);

    let empty = tempfile::tempdir().unwrap();
    let (rows, summary) = cmd_reconstruct(&synth_config(empty.path(), 1, 16, json!({"m_values": [10]})), None, &[]).unwrap();
    assert!(rows.is_empty() && summary.failures.is_empty());
    let files = snapshot(empty.path());
    assert_eq!(files.len(), 1);
    assert_eq!(csv_without(&files["gallery.csv"], &[]).len(), 1);
}

#[test]
fn psnr_falls_with_fewer_measurements_on_one_image() {
    let out = tempfile::tempdir().unwrap();
    let cfg = synth_config(out.path(), 1, 32, json!({"m_values": [500, 50, 10]}));
    let id = synth_id(2, hushcam_core::dataset::Valence::Negative);
    let (rows, _) = cmd_reconstruct(&cfg, None, &[id]).unwrap();
    let psnr: Vec<f64> = rows.iter().filter_map(|r| r.psnr).collect();
    assert_eq!(psnr.len(), 3);
    assert!(psnr[0] > psnr[1] && psnr[1] > psnr[2], "{psnr:?}");
}
