use alloc::vec::Vec;

use super::standardize::Standardizer;
use crate::dataset::Valence;
use crate::matrix::Matrix;
use crate::{math, Error, Result};

/// k-nearest-neighbour vote in standardized feature space.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct KnnModel {
    pub k: usize,
    pub standardizer: Standardizer,
    pub train: Matrix,
    pub labels: Vec<Valence>,
}

impl KnnModel {
    pub fn fit(x: &Matrix, y: &[Valence], k: usize) -> Result<Self> {
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
        if k == 0 || k > y.len() {
            return Err(Error::InvalidConfig("knn k must be between 1 and the training size"));
        }
        let standardizer = Standardizer::fit(x)?;
        Ok(Self {
            k,
            train: standardizer.apply(x)?,
            standardizer,
            labels: y.to_vec(),
        })
    }

    /// Majority vote among the `k` closest (lowest index on equal distance).
    /// Tied votes go to the class with the smaller summed distance, then to
    /// the lower class index.
    pub fn predict(&self, x: &Matrix) -> Result<Vec<Valence>> {
        let q = self.standardizer.apply(x)?;
        let mut dist: Vec<(f64, usize)> = Vec::with_capacity(self.train.rows());
        let mut out = Vec::with_capacity(q.rows());
        for row in q.iter_rows() {
            dist.clear();
            dist.extend(self.train.iter_rows().enumerate().map(|(i, t)| {
                let d2: f64 = row.iter().zip(t).map(|(a, b)| (a - b) * (a - b)).sum();
                (d2, i)
            }));
            dist.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            let mut votes = [0usize; Valence::COUNT];
            let mut sums = [0.0f64; Valence::COUNT];
            for &(d2, i) in &dist[..self.k] {
                let c = self.labels[i].index();
                votes[c] += 1;
                sums[c] += math::sqrt(d2);
            }
            let mut best = 0;
            for c in 1..Valence::COUNT {
                if votes[c] > votes[best] || (votes[c] == votes[best] && sums[c] < sums[best]) {
                    best = c;
                }
            }
            out.push(Valence::ALL[best]);
        }
        Ok(out)
    }
}

pub fn knn_predict(train_x: &Matrix, train_y: &[Valence], x: &Matrix, k: usize) -> Result<Vec<Valence>> {
    KnnModel::fit(train_x, train_y, k)?.predict(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_nn_recovers_training_labels() {
        let x = Matrix::from_rows(&[[0.0, 0.0], [5.0, 5.0], [10.0, 0.0]]).unwrap();
        let y = [Valence::Positive, Valence::Neutral, Valence::Negative];
        assert_eq!(knn_predict(&x, &y, &x, 1).unwrap(), y);
    }

    #[test]
    fn vote_tie_uses_summed_distance() {
        let x = Matrix::from_rows(&[[0.0], [1.0], [3.0], [10.0]]).unwrap();
        let y = [Valence::Negative, Valence::Positive, Valence::Negative, Valence::Positive];
        // Two neighbours of 0.4: 0.0 (Negative, 0.4) and 1.0 (Positive, 0.6).
        let q = Matrix::from_rows(&[[0.4]]).unwrap();
        assert_eq!(knn_predict(&x, &y, &q, 2).unwrap(), [Valence::Negative]);
    }

    #[test]
    fn rejects_bad_k() {
        let x = Matrix::zeros(2, 1);
        let y = [Valence::Positive, Valence::Negative];
        assert!(KnnModel::fit(&x, &y, 0).is_err());
        assert!(KnnModel::fit(&x, &y, 3).is_err());
    }
}
