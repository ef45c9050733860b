use alloc::vec::Vec;

use super::gnb::GnbModel;
use super::knn::KnnModel;
use super::mlp::{mlp_train, MlpConfig, MlpModel};
use super::standardize::Standardizer;
use crate::dataset::{kfold_split, FoldAssignment, Valence};
use crate::matrix::Matrix;
use crate::rng::derive_seed;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "lowercase"))]
pub enum ClassifierConfig {
    Mlp(MlpConfig),
    Knn { k: usize },
    Gnb,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        ClassifierConfig::Mlp(MlpConfig::default())
    }
}

impl ClassifierConfig {
    pub fn name(&self) -> &'static str {
        match self {
            ClassifierConfig::Mlp(_) => "mlp",
            ClassifierConfig::Knn { .. } => "knn",
            ClassifierConfig::Gnb => "gnb",
        }
    }

    /// Same configuration with any training seed replaced by a value derived
    /// from it and `stream`.
    pub fn reseeded(&self, stream: u64) -> Self {
        match self {
            ClassifierConfig::Mlp(c) => ClassifierConfig::Mlp(MlpConfig {
                seed: derive_seed(c.seed, stream),
                ..c.clone()
            }),
            other => other.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "lowercase"))]
pub enum Classifier {
    Mlp(MlpModel),
    Knn(KnnModel),
    Gnb(GnbModel),
}

impl Classifier {
    pub fn fit(cfg: &ClassifierConfig, x: &Matrix, y: &[Valence]) -> Result<Self> {
        Ok(match cfg {
            ClassifierConfig::Mlp(c) => Classifier::Mlp(mlp_train(x, y, c)?),
            ClassifierConfig::Knn { k } => Classifier::Knn(KnnModel::fit(x, y, *k)?),
            ClassifierConfig::Gnb => Classifier::Gnb(GnbModel::fit(x, y)?),
        })
    }

    pub fn predict(&self, x: &Matrix) -> Result<Vec<Valence>> {
        match self {
            Classifier::Mlp(m) => Ok(m.predict(x)?.labels),
            Classifier::Knn(m) => m.predict(x),
            Classifier::Gnb(m) => m.predict(x),
        }
    }

    pub fn standardizer(&self) -> &Standardizer {
        match self {
            Classifier::Mlp(m) => &m.standardizer,
            Classifier::Knn(m) => &m.standardizer,
            Classifier::Gnb(m) => &m.standardizer,
        }
    }
}

/// Rows are true classes, columns predicted classes.
pub type Confusion = [[usize; Valence::COUNT]; Valence::COUNT];

pub fn confusion_matrix(truth: &[Valence], predicted: &[Valence]) -> Confusion {
    let mut c = [[0; Valence::COUNT]; Valence::COUNT];
    for (t, p) in truth.iter().zip(predicted) {
        c[t.index()][p.index()] += 1;
    }
    c
}

pub fn accuracy_of(c: &Confusion) -> f64 {
    let total: usize = c.iter().flatten().sum();
    if total == 0 {
        return 0.0;
    }
    (0..Valence::COUNT).map(|i| c[i][i]).sum::<usize>() as f64 / total as f64
}

/// Unweighted mean of per-class F1 over classes that occur in truth or
/// prediction.
pub fn macro_f1(c: &Confusion) -> f64 {
    let mut sum = 0.0;
    let mut classes = 0;
    for k in 0..Valence::COUNT {
        let tp = c[k][k] as f64;
        let actual: usize = c[k].iter().sum();
        let predicted: usize = c.iter().map(|row| row[k]).sum();
        if actual + predicted == 0 {
            continue;
        }
        classes += 1;
        sum += 2.0 * tp / (actual + predicted) as f64;
    }
    if classes == 0 {
        0.0
    } else {
        sum / classes as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EvalReport {
    /// Pooled held-out accuracy, `trace / sum` of `confusion`.
    pub accuracy: f64,
    pub confusion: Confusion,
    pub per_fold: Vec<f64>,
    pub mean_fold_accuracy: f64,
    /// Mean over folds of accuracy on each fold's own training rows.
    pub train_accuracy: f64,
    pub per_fold_train: Vec<f64>,
    pub macro_f1: f64,
}

impl EvalReport {
    pub fn evaluated(&self) -> usize {
        self.confusion.iter().flatten().sum()
    }

    /// Report for a single evaluation without folds.
    pub fn single(truth: &[Valence], predicted: &[Valence], train_accuracy: f64) -> Self {
        let confusion = confusion_matrix(truth, predicted);
        let accuracy = accuracy_of(&confusion);
        Self {
            accuracy,
            confusion,
            per_fold: Vec::new(),
            mean_fold_accuracy: accuracy,
            train_accuracy,
            per_fold_train: Vec::new(),
            macro_f1: macro_f1(&confusion),
        }
    }
}

/// Held-out predictions of one fold.
#[derive(Debug, Clone, PartialEq)]
pub struct FoldOutcome {
    pub test_indices: Vec<usize>,
    pub predicted: Vec<Valence>,
    pub train_accuracy: f64,
}

/// Fits on every fold but `fold` and predicts the held-out rows. The model
/// seed is derived from the configured one and the fold index.
pub fn run_fold(
    cfg: &ClassifierConfig,
    x: &Matrix,
    y: &[Valence],
    folds: &FoldAssignment,
    fold: usize,
) -> Result<FoldOutcome> {
    let train = folds.train_indices(fold);
    let test = folds.test_indices(fold);
    let train_y: Vec<Valence> = train.iter().map(|&i| y[i]).collect();
    let train_x = x.select_rows(&train);
    let model = Classifier::fit(&cfg.reseeded(fold as u64), &train_x, &train_y)?;
    let train_pred = model.predict(&train_x)?;
    let train_accuracy = accuracy_of(&confusion_matrix(&train_y, &train_pred));
    let predicted = model.predict(&x.select_rows(&test))?;
    Ok(FoldOutcome {
        test_indices: test,
        predicted,
        train_accuracy,
    })
}

/// Combines fold outcomes, in fold order, into a report.
pub fn assemble_report(y: &[Valence], outcomes: &[FoldOutcome]) -> EvalReport {
    let mut confusion = [[0; Valence::COUNT]; Valence::COUNT];
    let mut per_fold = Vec::with_capacity(outcomes.len());
    for o in outcomes {
        let truth: Vec<Valence> = o.test_indices.iter().map(|&i| y[i]).collect();
        let c = confusion_matrix(&truth, &o.predicted);
        per_fold.push(accuracy_of(&c));
        for (row, add) in confusion.iter_mut().zip(&c) {
            for (a, b) in row.iter_mut().zip(add) {
                *a += b;
            }
        }
    }
    let per_fold_train: Vec<f64> = outcomes.iter().map(|o| o.train_accuracy).collect();
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len().max(1) as f64;
    EvalReport {
        accuracy: accuracy_of(&confusion),
        confusion,
        mean_fold_accuracy: mean(&per_fold),
        per_fold,
        train_accuracy: mean(&per_fold_train),
        per_fold_train,
        macro_f1: macro_f1(&confusion),
    }
}

/// Stratified k-fold cross validation with fold assignment seeded by `seed`.
pub fn cross_validate(
    cfg: &ClassifierConfig,
    x: &Matrix,
    y: &[Valence],
    k: usize,
    seed: u64,
) -> Result<EvalReport> {
    if x.rows() != y.len() {
        return Err(Error::DimensionMismatch {
            what: "label count",
            expected: x.rows(),
            found: y.len(),
        });
    }
    let folds = kfold_split(y.len(), k, seed, Some(y))?;
    let outcomes = (0..k)
        .map(|f| run_fold(cfg, x, y, &folds, f))
        .collect::<Result<Vec<_>>>()?;
    Ok(assemble_report(y, &outcomes))
}

#[cfg(test)]
mod tests {
    use super::*;
    use Valence::*;

    #[test]
    fn metrics_on_known_confusion() {
        let truth = [Positive, Positive, Neutral, Negative];
        let pred = [Positive, Neutral, Neutral, Negative];
        let c = confusion_matrix(&truth, &pred);
        assert_eq!(c[0], [1, 1, 0]);
        assert_eq!(accuracy_of(&c), 0.75);
        // F1: Positive 2/3, Neutral 2/3, Negative 1.
        assert!((macro_f1(&c) - (2.0 / 3.0 + 2.0 / 3.0 + 1.0) / 3.0).abs() < 1e-15);
    }

    #[test]
    fn reseeding_only_touches_mlp() {
        let knn = ClassifierConfig::Knn { k: 3 };
        assert_eq!(knn.reseeded(4), knn);
        let mlp = ClassifierConfig::default();
        assert_ne!(mlp.reseeded(0), mlp.reseeded(1));
    }
}
