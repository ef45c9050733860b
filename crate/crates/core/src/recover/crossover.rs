//! Support reduction for L1 solutions.
//!
//! Given `x`, moves along null directions of the active columns `A_S` until
//! those columns are linearly independent. Each move keeps `Ax` fixed and
//! does not increase `‖x‖₁`, so an optimal point of basis pursuit stays
//! optimal and ends on a vertex of the optimal set. When the optimum is not
//! unique (few measurements, repeated binary columns) this picks a basic
//! solution with at most `m` nonzeros, the one an LP solver would report.

use alloc::vec::Vec;

use crate::math::{norm1, norm2};
use crate::sensing::LinearOperator;

/// Relative size below which an eliminated entry counts as zero.
const DEPENDENCE_TOL: f64 = 1e-9;

/// One Gauss-Jordan step: scale row `row` by `1 / pivot` and clear the
/// other rows with the multipliers in `col`.
struct Step {
    row: usize,
    pivot: f64,
    col: Vec<f64>,
}

impl Step {
    fn apply(&self, c: &mut [f64]) {
        let lead = c[self.row] / self.pivot;
        c[self.row] = lead;
        if lead != 0.0 {
            for (i, (ci, &g)) in c.iter_mut().zip(&self.col).enumerate() {
                if i != self.row {
                    *ci -= g * lead;
                }
            }
        }
    }
}

/// Reduces the support of `x` in place. Returns the number of entries
/// removed. Leaves `x` untouched if rounding would raise the residual
/// against `y` above `max(current residual, residual_cap)`.
pub(crate) fn reduce_support<A: LinearOperator + ?Sized>(
    a: &A,
    y: &[f64],
    x: &mut [f64],
    residual_cap: f64,
) -> usize {
    let m = a.rows();
    let mut support: Vec<usize> = (0..x.len()).filter(|&j| x[j] != 0.0).collect();
    if support.len() <= 1 {
        return 0;
    }
    // Largest entries become basic first; dependents are removed smallest first.
    support.sort_by(|&p, &q| x[q].abs().total_cmp(&x[p].abs()).then(p.cmp(&q)));

    let mut steps: Vec<Step> = Vec::new();
    let mut used = alloc::vec![false; m];
    let mut basic: Vec<usize> = Vec::new();
    // (index, partially eliminated column, steps already applied)
    let mut dependent: Vec<(usize, Vec<f64>, usize)> = Vec::new();
    for &j in &support {
        let mut c = a.column(j);
        let scale = c.iter().fold(0.0f64, |s, v| s.max(v.abs()));
        for s in &steps {
            s.apply(&mut c);
        }
        let (row, big) = (0..m)
            .filter(|&i| !used[i])
            .map(|i| (i, c[i].abs()))
            .fold((usize::MAX, 0.0), |b, e| if e.1 > b.1 { e } else { b });
        if row != usize::MAX && big > DEPENDENCE_TOL * scale.max(1.0) {
            used[row] = true;
            let pivot = c[row];
            steps.push(Step { row, pivot, col: c });
            basic.push(j);
        } else {
            dependent.push((j, c, steps.len()));
        }
    }
    if dependent.is_empty() {
        return 0;
    }

    // w[k]: coefficient of basic column k in the dependent column.
    let mut tableau: Vec<(usize, Vec<f64>)> = dependent
        .into_iter()
        .rev()
        .map(|(j, mut c, done)| {
            for s in &steps[done..] {
                s.apply(&mut c);
            }
            (j, steps.iter().map(|s| c[s.row]).collect())
        })
        .collect();

    let before = x.to_vec();
    let old_res = norm2(&super::spg::residual(a, y, x));
    let old_l1 = norm1(x);
    let signum = |v: f64| if v > 0.0 { 1.0 } else { -1.0 };

    let mut removed = 0;
    let mut next = 0;
    while next < tableau.len() {
        let (j, w) = core::mem::take(&mut tableau[next]);
        next += 1;
        // Rate of change of ‖x‖₁ along v = e_j − Σ w_k e_{basic k}.
        let g = signum(x[j]) - w.iter().zip(&basic).map(|(wk, &b)| signum(x[b]) * wk).sum::<f64>();
        let d = if g != 0.0 { -signum(g) } else { -signum(x[j]) };
        // Ratio test, the entering column winning ties.
        let mut t = if d * signum(x[j]) < 0.0 { x[j].abs() } else { f64::INFINITY };
        let mut leave = None;
        for (k, (&wk, &b)) in w.iter().zip(&basic).enumerate() {
            let v = -d * wk;
            if v * signum(x[b]) < 0.0 {
                let r = x[b].abs() / v.abs();
                if r < t {
                    t = r;
                    leave = Some(k);
                }
            }
        }
        if !t.is_finite() {
            // Only reachable through rounding; leave this column alone.
            continue;
        }
        x[j] += d * t;
        for (&wk, &b) in w.iter().zip(&basic) {
            x[b] -= d * t * wk;
        }
        removed += 1;
        match leave {
            None => x[j] = 0.0,
            Some(k) => {
                x[basic[k]] = 0.0;
                basic[k] = j;
                let pivot = w[k];
                for (_, wq) in &mut tableau[next..] {
                    let lead = wq[k] / pivot;
                    for (l, (q, &wl)) in wq.iter_mut().zip(&w).enumerate() {
                        *q = if l == k { lead } else { *q - wl * lead };
                    }
                }
            }
        }
    }

    let new_res = norm2(&super::spg::residual(a, y, x));
    let accepted = new_res <= old_res.max(residual_cap) * (1.0 + 1e-9)
        && norm1(x) <= old_l1 * (1.0 + 1e-12);
    if accepted {
        removed
    } else {
        x.copy_from_slice(&before);
        0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::Matrix;

    #[test]
    fn mass_split_over_duplicate_columns_is_merged() {
        // Columns 0 and 2 are identical.
        let a = Matrix::from_rows(&[alloc::vec![1.0, 0.0, 1.0], alloc::vec![0.0, 1.0, 0.0]]).unwrap();
        let y = [2.0, 1.0];
        let mut x = alloc::vec![0.5, 1.0, 1.5];
        assert_eq!(reduce_support(&a, &y, &mut x, 1e-12), 1);
        assert_eq!(x, alloc::vec![0.0, 1.0, 2.0]);
    }

    #[test]
    fn l1_never_increases_and_fit_is_kept() {
        let a = Matrix::from_rows(&[
            alloc::vec![1.0, 1.0, 0.0, 1.0, 0.0],
            alloc::vec![0.0, 1.0, 1.0, 1.0, 1.0],
        ])
        .unwrap();
        let mut x = alloc::vec![0.3, -0.2, 0.7, 0.4, 0.1];
        let mut y = alloc::vec![0.0; 2];
        a.apply_into(&x, &mut y);
        let l1 = norm1(&x);
        reduce_support(&a, &y, &mut x, 1e-12);
        assert!(x.iter().filter(|v| **v != 0.0).count() <= 2);
        assert!(norm1(&x) <= l1 + 1e-12);
        assert!(norm2(&super::super::spg::residual(&a, &y, &x)) < 1e-12);
    }

    #[test]
    fn independent_support_is_untouched() {
        let a = Matrix::from_rows(&[alloc::vec![1.0, 0.0], alloc::vec![0.0, 1.0]]).unwrap();
        let mut x = alloc::vec![1.0, -1.0];
        assert_eq!(reduce_support(&a, &[1.0, -1.0], &mut x, 0.0), 0);
        assert_eq!(x, alloc::vec![1.0, -1.0]);
    }
}
