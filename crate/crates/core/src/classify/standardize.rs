use alloc::vec::Vec;

use crate::matrix::Matrix;
use crate::{math, Error, Result};

/// Standard deviations below this are replaced by it.
pub const STD_FLOOR: f64 = 1e-8;

/// Per-feature mean and (population) standard deviation.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Standardizer {
    means: Vec<f64>,
    stds: Vec<f64>,
}

impl Standardizer {
    pub fn new(means: Vec<f64>, stds: Vec<f64>) -> Result<Self> {
        if means.len() != stds.len() {
            return Err(Error::DimensionMismatch {
                what: "standardizer length",
                expected: means.len(),
                found: stds.len(),
            });
        }
        let stds = stds.into_iter().map(|s| s.max(STD_FLOOR)).collect();
        Ok(Self { means, stds })
    }

    pub fn fit(x: &Matrix) -> Result<Self> {
        if x.rows() == 0 {
            return Err(Error::EmptyTrainingSet);
        }
        let (n, d) = (x.rows() as f64, x.cols());
        let mut means = alloc::vec![0.0; d];
        for row in x.iter_rows() {
            for (m, v) in means.iter_mut().zip(row) {
                *m += v;
            }
        }
        means.iter_mut().for_each(|m| *m /= n);
        let mut vars = alloc::vec![0.0; d];
        for row in x.iter_rows() {
            for ((s, v), m) in vars.iter_mut().zip(row).zip(&means) {
                *s += (v - m) * (v - m);
            }
        }
        let stds = vars
            .into_iter()
            .map(|s| math::sqrt(s / n).max(STD_FLOOR))
            .collect();
        Ok(Self { means, stds })
    }

    pub fn dim(&self) -> usize {
        self.means.len()
    }

    pub fn means(&self) -> &[f64] {
        &self.means
    }

    pub fn stds(&self) -> &[f64] {
        &self.stds
    }

    pub fn apply_row(&self, row: &[f64], out: &mut [f64]) {
        for (((o, v), m), s) in out.iter_mut().zip(row).zip(&self.means).zip(&self.stds) {
            *o = (v - m) / s;
        }
    }

    pub fn apply(&self, x: &Matrix) -> Result<Matrix> {
        if x.cols() != self.dim() {
            return Err(Error::DimensionMismatch {
                what: "feature count",
                expected: self.dim(),
                found: x.cols(),
            });
        }
        let mut out = Matrix::zeros(x.rows(), x.cols());
        for i in 0..x.rows() {
            self.apply_row(x.row(i), out.row_mut(i));
        }
        Ok(out)
    }
}

pub fn standardize_fit(x: &Matrix) -> Result<Standardizer> {
    Standardizer::fit(x)
}

pub fn standardize_apply(s: &Standardizer, x: &Matrix) -> Result<Matrix> {
    s.apply(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_point_case() {
        let x = Matrix::from_rows(&[[0.0], [2.0]]).unwrap();
        let s = Standardizer::fit(&x).unwrap();
        assert_eq!(s.means(), &[1.0]);
        assert_eq!(s.stds(), &[1.0]);
        assert_eq!(s.apply(&x).unwrap().as_slice(), &[-1.0, 1.0]);
    }

    #[test]
    fn constant_feature_maps_to_zero() {
        let x = Matrix::from_rows(&[[3.0, 1.0], [3.0, 2.0], [3.0, 4.0]]).unwrap();
        let s = Standardizer::fit(&x).unwrap();
        assert_eq!(s.stds()[0], STD_FLOOR);
        let t = s.apply(&x).unwrap();
        assert!((0..3).all(|i| t.get(i, 0) == 0.0));
    }

    #[test]
    fn rejects_empty_and_mismatched() {
        assert!(Standardizer::fit(&Matrix::zeros(0, 2)).is_err());
        let s = Standardizer::fit(&Matrix::zeros(2, 2)).unwrap();
        assert!(s.apply(&Matrix::zeros(2, 3)).is_err());
    }
}
