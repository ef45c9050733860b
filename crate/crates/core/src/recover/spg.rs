//! Spectral projected gradient for `min ½‖Ax − y‖² s.t. ‖x‖₁ ≤ τ`.
//!
//! Barzilai-Borwein steps, projection onto the L1 ball, and a nonmonotone
//! (Grippo-Lampariello-Lucidi) backtracking search along the projected
//! direction. Since `A(x + λd) = Ax + λAd`, each iteration costs one forward
//! and one adjoint product regardless of how many backtracking steps it takes.

use alloc::vec::Vec;

use super::l1::project_l1_in_place;
use super::{RecoveryResult, SolveTrace, SolverOptions};
use crate::math::{dot, norm1, norm2, norm_inf};
use crate::sensing::LinearOperator;
use crate::{Error, Result};

const SUFFICIENT_DECREASE: f64 = 1e-4;
const MAX_BACKTRACKS: usize = 40;
const RESIDUAL_REFRESH: usize = 25;
/// Relative duality gap at which a standalone LASSO solve stops.
const LASSO_GAP_REL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Exit {
    /// Residual below the feasibility threshold.
    Feasible,
    /// Duality gap below the requested threshold.
    Optimal,
    /// Iteration budget spent.
    Budget,
    /// No descent direction or the line search failed.
    Stalled,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct Stop {
    /// Stop once `‖r‖ ≤ residual`.
    pub residual: f64,
    /// Stop once `gap ≤ gap_abs + gap_rel * f`.
    pub gap_abs: f64,
    pub gap_rel: f64,
}

pub(crate) struct SpgOutcome {
    pub x: Vec<f64>,
    pub r: Vec<f64>,
    /// `Aᵀ r`.
    pub atr: Vec<f64>,
    pub iterations: usize,
    pub exit: Exit,
}

impl SpgOutcome {
    pub fn residual_norm(&self) -> f64 {
        norm2(&self.r)
    }
}

/// Runs SPG from `x0` (projected first). Appends every accepted objective
/// value to `history`.
pub(crate) fn run<A: LinearOperator + ?Sized>(
    a: &A,
    y: &[f64],
    tau: f64,
    x0: Vec<f64>,
    opts: &SolverOptions,
    budget: usize,
    stop: Stop,
    history: &mut Vec<f64>,
) -> SpgOutcome {
    let (m, n) = (a.rows(), a.cols());
    let (alpha_min, alpha_max) = opts.step_bounds;
    let window = opts.nonmonotone_window.max(1);

    let mut x = x0;
    project_l1_in_place(&mut x, tau);
    let mut r = residual(a, y, &x);
    let mut atr = alloc::vec![0.0; n];
    a.adjoint_into(&r, &mut atr);
    let mut f = 0.5 * dot(&r, &r);

    let mut best_x = x.clone();
    let mut best_r = r.clone();
    let mut best_atr = atr.clone();
    let mut best_f = f;

    let mut recent: Vec<f64> = alloc::vec![f];
    history.push(f);

    let mut d = alloc::vec![0.0; n];
    let mut ad = alloc::vec![0.0; m];
    let mut x_new = alloc::vec![0.0; n];
    let mut r_new = alloc::vec![0.0; m];
    let mut atr_new = alloc::vec![0.0; n];

    // Initial step: 1 / ‖P(x - g) - x‖∞ with g = -Aᵀr.
    projected_direction(&x, &atr, 1.0, tau, &mut d);
    let dn = norm_inf(&d);
    let mut alpha = if dn > 0.0 { (1.0 / dn).clamp(alpha_min, alpha_max) } else { 1.0 };

    let mut iterations = 0;
    let exit = loop {
        if norm2(&r) <= stop.residual {
            break Exit::Feasible;
        }
        let gap = tau * norm_inf(&atr) - dot(&x, &atr);
        if gap <= stop.gap_abs + stop.gap_rel * f {
            break Exit::Optimal;
        }
        if iterations >= budget {
            break Exit::Budget;
        }
        iterations += 1;

        projected_direction(&x, &atr, alpha, tau, &mut d);
        // gᵀd with g = -Aᵀr.
        let gtd = -dot(&atr, &d);
        if !(gtd < 0.0) {
            break Exit::Stalled;
        }
        a.apply_into(&d, &mut ad);
        let f_ref = recent.iter().copied().fold(f64::NEG_INFINITY, f64::max);

        let mut lambda = 1.0;
        let mut accepted = false;
        let mut f_new = f;
        for _ in 0..MAX_BACKTRACKS {
            for ((rn, &ri), &adi) in r_new.iter_mut().zip(&r).zip(&ad) {
                *rn = ri - lambda * adi;
            }
            f_new = 0.5 * dot(&r_new, &r_new);
            if f_new <= f_ref + SUFFICIENT_DECREASE * lambda * gtd {
                accepted = true;
                break;
            }
            // Safeguarded minimiser of the quadratic through f, gtd and f_new.
            let denom = 2.0 * (f_new - f - lambda * gtd);
            let trial = if denom > 0.0 { -gtd * lambda * lambda / denom } else { 0.5 * lambda };
            lambda = trial.clamp(0.1 * lambda, 0.5 * lambda);
        }
        if !accepted {
            break Exit::Stalled;
        }
        for ((xn, &xi), &di) in x_new.iter_mut().zip(&x).zip(&d) {
            *xn = xi + lambda * di;
        }
        if iterations % RESIDUAL_REFRESH == 0 {
            a.apply_into(&x_new, &mut r_new);
            for (rn, &yi) in r_new.iter_mut().zip(y) {
                *rn = yi - *rn;
            }
            f_new = 0.5 * dot(&r_new, &r_new);
        }
        a.adjoint_into(&r_new, &mut atr_new);

        // s = λd, Δg = -(Aᵀr_new - Aᵀr).
        let mut sts = 0.0;
        let mut sty = 0.0;
        for ((&di, &gn), &go) in d.iter().zip(&atr_new).zip(&atr) {
            let s = lambda * di;
            sts += s * s;
            sty -= s * (gn - go);
        }
        alpha = if sty <= 0.0 { alpha_max } else { (sts / sty).clamp(alpha_min, alpha_max) };

        core::mem::swap(&mut x, &mut x_new);
        core::mem::swap(&mut r, &mut r_new);
        core::mem::swap(&mut atr, &mut atr_new);
        f = f_new;
        history.push(f);
        if recent.len() == window {
            recent.remove(0);
        }
        recent.push(f);
        if f < best_f {
            best_f = f;
            best_x.copy_from_slice(&x);
            best_r.copy_from_slice(&r);
            best_atr.copy_from_slice(&atr);
        }
    };

    if f <= best_f {
        SpgOutcome { x, r, atr, iterations, exit }
    } else {
        SpgOutcome {
            x: best_x,
            r: best_r,
            atr: best_atr,
            iterations,
            exit,
        }
    }
}

/// `d = P_τ(x + α Aᵀr) − x`.
fn projected_direction(x: &[f64], atr: &[f64], alpha: f64, tau: f64, d: &mut [f64]) {
    for ((di, &xi), &gi) in d.iter_mut().zip(x).zip(atr) {
        *di = xi + alpha * gi;
    }
    project_l1_in_place(d, tau);
    for (di, &xi) in d.iter_mut().zip(x) {
        *di -= xi;
    }
}

pub(crate) fn residual<A: LinearOperator + ?Sized>(a: &A, y: &[f64], x: &[f64]) -> Vec<f64> {
    let mut r = alloc::vec![0.0; a.rows()];
    a.apply_into(x, &mut r);
    for (ri, &yi) in r.iter_mut().zip(y) {
        *ri = yi - *ri;
    }
    r
}

pub(crate) fn check_dims<A: LinearOperator + ?Sized>(a: &A, y: &[f64]) -> Result<()> {
    if y.len() != a.rows() {
        return Err(Error::DimensionMismatch {
            what: "measurement length",
            expected: a.rows(),
            found: y.len(),
        });
    }
    Ok(())
}

/// LASSO in constrained form from a zero start.
pub fn spg_lasso<A: LinearOperator + ?Sized>(
    a: &A,
    y: &[f64],
    tau: f64,
    opts: &SolverOptions,
) -> Result<RecoveryResult> {
    spg_lasso_warm(a, y, tau, alloc::vec![0.0; a.cols()], opts)
}

/// LASSO in constrained form from `x0`.
///
/// Stops when the residual drops below `feasibility_tol · max(1, ‖y‖)`, when
/// the duality gap is negligible, or after `max_iters` iterations.
/// `converged` reports the residual condition only, so a radius too small to
/// fit `y` returns its best iterate with `converged = false`.
pub fn spg_lasso_warm<A: LinearOperator + ?Sized>(
    a: &A,
    y: &[f64],
    tau: f64,
    x0: Vec<f64>,
    opts: &SolverOptions,
) -> Result<RecoveryResult> {
    opts.validate()?;
    check_dims(a, y)?;
    if !(tau >= 0.0) {
        return Err(Error::NegativeRadius(tau));
    }
    if x0.len() != a.cols() {
        return Err(Error::DimensionMismatch {
            what: "warm start length",
            expected: a.cols(),
            found: x0.len(),
        });
    }
    let scale = norm2(y).max(1.0);
    let stop = Stop {
        residual: opts.feasibility_tol * scale,
        gap_abs: opts.optimality_tol,
        gap_rel: LASSO_GAP_REL,
    };
    let mut objective = Vec::new();
    let out = run(a, y, tau, x0, opts, opts.max_iters, stop, &mut objective);
    let converged = out.residual_norm() <= stop.residual;
    Ok(RecoveryResult {
        residual_norm: out.residual_norm(),
        l1_norm: norm1(&out.x),
        iterations: out.iterations,
        converged,
        x_hat: out.x,
        trace: SolveTrace {
            objective,
            tau: alloc::vec![tau],
        },
    })
}
