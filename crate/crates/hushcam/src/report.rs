//! Tables written by the pipeline. All CSV output is UTF-8 with a header row.

use hushcam_core::classify::EvalReport;
use hushcam_core::dataset::Valence;
use serde::Serialize;

/// One row per requested measurement count.
#[derive(Debug, Clone, PartialEq, Serialize, serde::Deserialize)]
pub struct ReportRow {
    pub m: usize,
    pub compression_ratio_percent: f64,
    pub train_accuracy: f64,
    pub test_accuracy: f64,
    pub mean_psnr: Option<f64>,
    /// Monotonic-clock seconds; the only non-deterministic column.
    pub wall_time_s: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    /// In the order of the configured measurement counts.
    pub rows: Vec<ReportRow>,
    pub evals: Vec<(usize, EvalReport)>,
}

fn to_csv<T: Serialize>(rows: impl IntoIterator<Item = T>) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).expect("in-memory csv");
    }
    w.into_inner().expect("in-memory csv")
}

impl ExperimentReport {
    pub fn to_csv(&self) -> Vec<u8> {
        if self.rows.is_empty() {
            return b"m,compression_ratio_percent,train_accuracy,test_accuracy,mean_psnr,wall_time_s\n".to_vec();
        }
        to_csv(&self.rows)
    }

    /// Accuracy against measurement count, ascending in m like the
    /// accuracy-versus-M plot's x axis.
    pub fn series_csv(&self) -> Vec<u8> {
        #[derive(Serialize)]
        struct Point {
            m: usize,
            train_accuracy: f64,
            test_accuracy: f64,
        }
        let mut pts: Vec<Point> = self
            .rows
            .iter()
            .map(|r| Point {
                m: r.m,
                train_accuracy: r.train_accuracy,
                test_accuracy: r.test_accuracy,
            })
            .collect();
        pts.sort_by_key(|p| p.m);
        if pts.is_empty() {
            return b"m,train_accuracy,test_accuracy\n".to_vec();
        }
        to_csv(pts)
    }

    pub fn evals_json(&self) -> Vec<u8> {
        #[derive(Serialize)]
        struct Entry<'a> {
            m: usize,
            report: &'a EvalReport,
        }
        let entries: Vec<Entry> = self.evals.iter().map(|(m, report)| Entry { m: *m, report }).collect();
        let mut out = serde_json::to_vec_pretty(&entries).expect("plain data");
        out.push(b'\n');
        out
    }
}

/// Summary metrics and the flattened confusion matrix, one row per report.
/// Confusion columns are `truth_predicted`.
pub fn eval_reports_csv(evals: &[(usize, EvalReport)]) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header: Vec<String> = ["m", "accuracy", "mean_fold_accuracy", "train_accuracy", "macro_f1", "evaluated"]
        .map(String::from)
        .to_vec();
    for t in Valence::ALL {
        for p in Valence::ALL {
            header.push(format!("{}_{}", t.name(), p.name()));
        }
    }
    w.write_record(&header).expect("in-memory csv");
    for (m, r) in evals {
        let mut rec = vec![
            m.to_string(),
            r.accuracy.to_string(),
            r.mean_fold_accuracy.to_string(),
            r.train_accuracy.to_string(),
            r.macro_f1.to_string(),
            r.evaluated().to_string(),
        ];
        rec.extend(r.confusion.iter().flatten().map(usize::to_string));
        w.write_record(&rec).expect("in-memory csv");
    }
    w.into_inner().expect("in-memory csv")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GalleryRowKind {
    Original,
    Reconstruction,
}

/// Reconstruction sidecar row. Metrics are empty on `original` rows. `file`
/// is empty when nothing was written for the row.
#[derive(Debug, Clone, PartialEq, Serialize, serde::Deserialize)]
pub struct GalleryRow {
    pub id: String,
    pub row: GalleryRowKind,
    pub m: Option<usize>,
    pub psnr: Option<f64>,
    pub residual_norm: Option<f64>,
    pub l1_norm: Option<f64>,
    pub iterations: Option<usize>,
    pub wall_time_s: Option<f64>,
    pub converged: Option<bool>,
    pub file: String,
}

pub fn gallery_csv(rows: &[GalleryRow]) -> Vec<u8> {
    if rows.is_empty() {
        return b"id,row,m,psnr,residual_norm,l1_norm,iterations,wall_time_s,converged,file\n".to_vec();
    }
    to_csv(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn report_columns_and_empty_psnr() {
        let r = ExperimentReport {
            rows: vec![
                ReportRow {
                    m: 50,
                    compression_ratio_percent: 0.30517578125,
                    train_accuracy: 1.0,
                    test_accuracy: 0.5,
                    mean_psnr: None,
                    wall_time_s: 0.25,
                },
                ReportRow {
                    m: 1,
                    compression_ratio_percent: 0.006103515625,
                    train_accuracy: 0.4,
                    test_accuracy: 0.3,
                    mean_psnr: Some(12.5),
                    wall_time_s: 0.5,
                },
            ],
            evals: vec![],
        };
        let text = String::from_utf8(r.to_csv()).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "m,compression_ratio_percent,train_accuracy,test_accuracy,mean_psnr,wall_time_s");
        assert_eq!(lines[1], "50,0.30517578125,1.0,0.5,,0.25");
        let series = String::from_utf8(r.series_csv()).unwrap();
        assert_eq!(series.lines().nth(1).unwrap(), "1,0.4,0.3");
    }
}
