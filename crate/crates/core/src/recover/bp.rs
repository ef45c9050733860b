//! Noiseless basis pursuit, `min ‖x‖₁ s.t. Ax = y`, by Newton root finding on
//! the Pareto curve `φ(τ) = ‖y − A x_τ‖₂` where `x_τ` solves the LASSO with
//! radius `τ`.
//!
//! With `φ′(τ) = −‖Aᵀr_τ‖∞ / ‖r_τ‖₂` the Newton update for the root `φ = 0`
//! is `τ ← τ + ‖r_τ‖² / ‖Aᵀr_τ‖∞`. Each `φ(τ)` comes from SPG warm-started at
//! the previous solution, run until the duality gap is small relative to the
//! current objective. Starting at `τ = 0` the radii only increase.

use alloc::vec::Vec;

use super::crossover;
use super::dense::LuFactor;
use super::spg::{self, check_dims, residual, Exit, Stop};
use super::{RecoveryResult, SolveTrace, SolverOptions};
use crate::math::{norm1, norm2, norm_inf};
use crate::sensing::LinearOperator;
use crate::Result;

/// `s · A`.
struct Scaled<'a, A: ?Sized> {
    inner: &'a A,
    scale: f64,
}

impl<A: LinearOperator + ?Sized> LinearOperator for Scaled<'_, A> {
    fn rows(&self) -> usize {
        self.inner.rows()
    }

    fn cols(&self) -> usize {
        self.inner.cols()
    }

    fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        self.inner.apply_into(x, out);
        out.iter_mut().for_each(|v| *v *= self.scale);
    }

    fn adjoint_into(&self, r: &[f64], out: &mut [f64]) {
        self.inner.adjoint_into(r, out);
        out.iter_mut().for_each(|v| *v *= self.scale);
    }
}

/// Basis pursuit solver bound to one operator.
///
/// For square operators the feasible set is a single point, so the solver
/// factors the matrix once and answers every right-hand side with a direct
/// solve; the factorisation is reused across calls to [`BasisPursuit::solve`].
pub struct BasisPursuit<'a, A: ?Sized> {
    op: &'a A,
    opts: SolverOptions,
    scale: f64,
    lu: Option<LuFactor>,
}

impl<'a, A: LinearOperator + ?Sized> BasisPursuit<'a, A> {
    pub fn new(op: &'a A, opts: SolverOptions) -> Result<Self> {
        opts.validate()?;
        let (m, n) = (op.rows(), op.cols());
        // A uniform rescaling leaves the constrained problem unchanged.
        let scale = if opts.normalize {
            let mean_sq = op.frobenius_sq() / n as f64;
            if mean_sq > 0.0 {
                1.0 / crate::math::sqrt(mean_sq)
            } else {
                1.0
            }
        } else {
            1.0
        };
        let lu = if m == n {
            LuFactor::factor(n, op.dense_rows())
        } else {
            None
        };
        Ok(Self {
            op,
            opts,
            scale,
            lu,
        })
    }

    pub fn options(&self) -> &SolverOptions {
        &self.opts
    }

    pub fn solve(&self, y: &[f64]) -> Result<RecoveryResult> {
        check_dims(self.op, y)?;
        let n = self.op.cols();
        let ynorm = norm2(y);
        if ynorm == 0.0 {
            return Ok(RecoveryResult::zero(n, true));
        }
        let target = self.opts.feasibility_tol * ynorm;

        if let Some(lu) = &self.lu {
            let x = lu.solve(y);
            let rn = norm2(&residual(self.op, y, &x));
            let l1 = norm1(&x);
            return Ok(RecoveryResult {
                residual_norm: rn,
                l1_norm: l1,
                iterations: 1,
                converged: rn <= target,
                x_hat: x,
                trace: SolveTrace {
                    objective: alloc::vec![0.5 * rn * rn],
                    tau: alloc::vec![l1],
                },
            });
        }

        let a = Scaled {
            inner: self.op,
            scale: self.scale,
        };
        let stop = Stop {
            residual: target,
            gap_abs: self.opts.optimality_tol,
            gap_rel: self.opts.newton_tol,
        };
        let mut z = alloc::vec![0.0; n];
        let mut tau = 0.0;
        let mut budget = self.opts.max_iters;
        let mut iterations = 0;
        let mut converged = false;
        let mut objective = Vec::new();
        let mut taus = Vec::new();

        for _ in 0..self.opts.max_outer {
            let out = spg::run(&a, y, tau, z, &self.opts, budget, stop, &mut objective);
            budget -= out.iterations;
            iterations += out.iterations;
            taus.push(tau);
            let rn = out.residual_norm();
            let gnorm = norm_inf(&out.atr);
            z = out.x;
            if rn <= target {
                converged = true;
                break;
            }
            if budget == 0 || gnorm == 0.0 {
                break;
            }
            let step = rn * rn / gnorm;
            if out.exit == Exit::Stalled && !(step > f64::EPSILON * tau) {
                break;
            }
            tau += step;
        }

        let mut x: Vec<f64> = z.iter().map(|v| v * self.scale).collect();
        if self.opts.basic_solution {
            crossover::reduce_support(self.op, y, &mut x, target);
        }
        let rn = norm2(&residual(self.op, y, &x));
        Ok(RecoveryResult {
            residual_norm: rn,
            l1_norm: norm1(&x),
            iterations,
            converged: converged && rn <= self.opts.feasibility_tol * ynorm.max(1.0),
            x_hat: x,
            trace: SolveTrace {
                objective,
                tau: taus.into_iter().map(|t| t * self.scale).collect(),
            },
        })
    }
}

/// One-shot basis pursuit.
pub fn basis_pursuit<A: LinearOperator + ?Sized>(
    op: &A,
    y: &[f64],
    opts: &SolverOptions,
) -> Result<RecoveryResult> {
    BasisPursuit::new(op, opts.clone())?.solve(y)
}
