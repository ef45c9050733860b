use alloc::vec::Vec;

use super::standardize::Standardizer;
use crate::dataset::{class_counts, Valence};
use crate::matrix::Matrix;
use crate::{math, Error, Result};

/// Lower bound on every per-class variance.
pub const VAR_FLOOR: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ClassGaussian {
    pub log_prior: f64,
    pub means: Vec<f64>,
    pub vars: Vec<f64>,
}

/// Gaussian naive Bayes. Classes that were absent when fitting have no
/// entry and are never predicted.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GnbModel {
    pub standardizer: Standardizer,
    pub classes: [Option<ClassGaussian>; Valence::COUNT],
}

impl GnbModel {
    pub fn fit(x: &Matrix, y: &[Valence]) -> Result<Self> {
        if x.rows() != y.len() {
            return Err(Error::DimensionMismatch {
                what: "label count",
                expected: x.rows(),
                found: y.len(),
            });
        }
        if y.is_empty() {
            return Err(Error::EmptyTrainingSet);
        }
        let standardizer = Standardizer::fit(x)?;
        let z = standardizer.apply(x)?;
        let counts = class_counts(y);
        let d = x.cols();
        let n = y.len() as f64;
        let classes = core::array::from_fn(|c| {
            let count = counts[c];
            if count == 0 {
                return None;
            }
            let rows = || (0..y.len()).filter(move |&i| y[i].index() == c);
            let mut means = alloc::vec![0.0; d];
            for i in rows() {
                for (m, v) in means.iter_mut().zip(z.row(i)) {
                    *m += v;
                }
            }
            means.iter_mut().for_each(|m| *m /= count as f64);
            let mut vars = alloc::vec![0.0; d];
            for i in rows() {
                for ((s, v), m) in vars.iter_mut().zip(z.row(i)).zip(&means) {
                    *s += (v - m) * (v - m);
                }
            }
            vars.iter_mut()
                .for_each(|s| *s = (*s / count as f64).max(VAR_FLOOR));
            Some(ClassGaussian {
                log_prior: math::ln(count as f64 / n),
                means,
                vars,
            })
        });
        Ok(Self {
            standardizer,
            classes,
        })
    }

    /// Joint log-likelihood per class; absent classes get `-∞`.
    pub fn log_scores(&self, row: &[f64]) -> [f64; Valence::COUNT] {
        let mut z = alloc::vec![0.0; row.len()];
        self.standardizer.apply_row(row, &mut z);
        core::array::from_fn(|c| match &self.classes[c] {
            None => f64::NEG_INFINITY,
            Some(g) => {
                let mut s = g.log_prior;
                for ((v, m), var) in z.iter().zip(&g.means).zip(&g.vars) {
                    s -= 0.5 * (math::ln(2.0 * core::f64::consts::PI * var) + (v - m) * (v - m) / var);
                }
                s
            }
        })
    }

    pub fn predict(&self, x: &Matrix) -> Result<Vec<Valence>> {
        if x.cols() != self.standardizer.dim() {
            return Err(Error::DimensionMismatch {
                what: "feature count",
                expected: self.standardizer.dim(),
                found: x.cols(),
            });
        }
        Ok(x.iter_rows()
            .map(|r| {
                let s = self.log_scores(r);
                let mut best = None::<usize>;
                for c in 0..Valence::COUNT {
                    if self.classes[c].is_some() && best.is_none_or(|b| s[c] > s[b]) {
                        best = Some(c);
                    }
                }
                Valence::ALL[best.expect("fit guarantees one class")]
            })
            .collect())
    }
}

pub fn gnb_fit(x: &Matrix, y: &[Valence]) -> Result<GnbModel> {
    GnbModel::fit(x, y)
}

pub fn gnb_predict(model: &GnbModel, x: &Matrix) -> Result<Vec<Valence>> {
    model.predict(x)
}
