//! Orthogonal matching pursuit.

use alloc::vec::Vec;

use super::dense::IncrementalQr;
use super::spg::check_dims;
use super::{RecoveryResult, SolveTrace, SolverOptions};
use crate::math::{dot, norm1, norm2};
use crate::sensing::LinearOperator;
use crate::{Error, Result};

/// Residual level, relative to `max(1, ‖y‖)`, at which OMP stops early.
pub const OMP_RESIDUAL_TOL: f64 = 1e-12;

/// Greedy state: the active support, its orthonormal basis and the current
/// residual. Each [`Omp::step`] adds the column with the largest normalised
/// correlation (lowest index on ties) and refits by least squares.
pub struct Omp<'a, A: ?Sized> {
    op: &'a A,
    y: Vec<f64>,
    support: Vec<usize>,
    qr: IncrementalQr,
    residual: Vec<f64>,
    norms: Vec<f64>,
    atr: Vec<f64>,
}

impl<'a, A: LinearOperator + ?Sized> Omp<'a, A> {
    pub fn new(op: &'a A, y: &[f64]) -> Result<Self> {
        check_dims(op, y)?;
        let norms = (0..op.cols()).map(|j| op.column_norm(j)).collect();
        Ok(Self {
            op,
            y: y.to_vec(),
            support: Vec::new(),
            qr: IncrementalQr::default(),
            residual: y.to_vec(),
            norms,
            atr: alloc::vec![0.0; op.cols()],
        })
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn residual(&self) -> &[f64] {
        &self.residual
    }

    /// Adds one column. Returns the chosen index, or `None` when no column
    /// correlates with the residual.
    pub fn step(&mut self) -> Result<Option<usize>> {
        self.op.adjoint_into(&self.residual, &mut self.atr);
        let mut best: Option<(usize, f64)> = None;
        for (j, (&c, &nrm)) in self.atr.iter().zip(&self.norms).enumerate() {
            if nrm == 0.0 || self.support.contains(&j) {
                continue;
            }
            let score = c.abs() / nrm;
            if best.is_none_or(|(_, s)| score > s) {
                best = Some((j, score));
            }
        }
        let Some((j, score)) = best else {
            return Ok(None);
        };
        if score == 0.0 {
            return Ok(None);
        }
        let col = self.op.column(j);
        if !self.qr.push(&col) {
            return Err(Error::SingularActiveSet(j));
        }
        self.support.push(j);
        let q = self.qr.q(self.qr.len() - 1);
        let c = dot(q, &self.residual);
        for (r, &qi) in self.residual.iter_mut().zip(q) {
            *r -= c * qi;
        }
        Ok(Some(j))
    }

    /// Least-squares coefficients on the support, scattered to length `n`.
    pub fn estimate(&self) -> Vec<f64> {
        let mut x = alloc::vec![0.0; self.op.cols()];
        for (&j, c) in self.support.iter().zip(self.qr.solve(&self.y)) {
            x[j] = c;
        }
        x
    }
}

/// Runs at most `k` OMP steps, stopping early once the residual is below
/// [`OMP_RESIDUAL_TOL`].
pub fn omp<A: LinearOperator + ?Sized>(op: &A, y: &[f64], k: usize) -> Result<RecoveryResult> {
    if k == 0 || k > op.rows() {
        return Err(Error::InvalidSparsity { k, m: op.rows() });
    }
    let mut state = Omp::new(op, y)?;
    let tol = OMP_RESIDUAL_TOL * norm2(y).max(1.0);
    let mut objective = alloc::vec![0.5 * dot(y, y)];
    let mut iterations = 0;
    while iterations < k && norm2(state.residual()) > tol {
        if state.step()?.is_none() {
            break;
        }
        iterations += 1;
        let r = state.residual();
        objective.push(0.5 * dot(r, r));
    }
    let x = state.estimate();
    let rn = norm2(state.residual());
    let l1 = norm1(&x);
    Ok(RecoveryResult {
        residual_norm: rn,
        l1_norm: l1,
        iterations,
        converged: rn <= SolverOptions::default().feasibility_tol * norm2(y).max(1.0),
        x_hat: x,
        trace: SolveTrace {
            objective,
            tau: Vec::new(),
        },
    })
}
