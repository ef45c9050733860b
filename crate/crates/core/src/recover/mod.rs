//! Sparse recovery from compressed measurements.

mod bp;
mod crossover;
mod dense;
mod l1;
mod omp;
mod spg;

use alloc::vec::Vec;

pub use bp::{basis_pursuit, BasisPursuit};
pub use l1::project_l1;
pub use omp::{omp, Omp, OMP_RESIDUAL_TOL};
pub use spg::{spg_lasso, spg_lasso_warm};

use crate::image::Image;
use crate::sensing::{CompressedSample, SensingOperator};
use crate::wavelet::{Transform2d, WaveletSpec};
use crate::{math, Error, Result};

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct SolverOptions {
    /// SPG iteration budget. Basis pursuit shares it across all radii.
    pub max_iters: usize,
    /// Relative residual `‖Ax − y‖ / ‖y‖` accepted as feasible.
    pub feasibility_tol: f64,
    /// Barzilai-Borwein step clamp `(min, max)`.
    pub step_bounds: (f64, f64),
    /// Number of past objective values the line search compares against.
    pub nonmonotone_window: usize,
    /// Duality gap, relative to the current objective, at which a LASSO
    /// subproblem is accurate enough for a Newton update of the radius.
    pub newton_tol: f64,
    /// Absolute duality gap at which a LASSO subproblem counts as solved.
    pub optimality_tol: f64,
    /// Cap on Newton updates of the radius.
    pub max_outer: usize,
    /// Rescale the operator to unit mean column norm inside the solver.
    pub normalize: bool,
    /// Basis pursuit only: drop linearly dependent columns from the returned
    /// support without raising `‖x‖₁` or the residual, so a non-unique
    /// optimum is reported as a basic solution.
    pub basic_solution: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            max_iters: 3000,
            feasibility_tol: 1e-4,
            step_bounds: (1e-16, 1e16),
            nonmonotone_window: 10,
            newton_tol: 1e-1,
            optimality_tol: 1e-10,
            max_outer: 200,
            normalize: true,
            basic_solution: true,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.step_bounds;
        if self.max_iters == 0 {
            return Err(Error::InvalidConfig("max_iters must be at least 1"));
        }
        if !(self.feasibility_tol > 0.0 && self.newton_tol > 0.0 && self.optimality_tol > 0.0) {
            return Err(Error::InvalidConfig("solver tolerances must be positive"));
        }
        if !(lo > 0.0 && lo < hi) {
            return Err(Error::InvalidConfig("step bounds must satisfy 0 < min < max"));
        }
        if self.nonmonotone_window == 0 || self.max_outer == 0 {
            return Err(Error::InvalidConfig("window and outer cap must be at least 1"));
        }
        Ok(())
    }
}

/// Per-iteration diagnostics of a solve.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SolveTrace {
    /// Objective `½‖r‖²` after every accepted step (solver scale).
    pub objective: Vec<f64>,
    /// L1 radii visited by the Pareto root finder.
    pub tau: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecoveryResult {
    pub x_hat: Vec<f64>,
    pub residual_norm: f64,
    pub l1_norm: f64,
    pub iterations: usize,
    pub converged: bool,
    pub trace: SolveTrace,
}

impl RecoveryResult {
    pub(crate) fn zero(n: usize, converged: bool) -> Self {
        Self {
            x_hat: alloc::vec![0.0; n],
            residual_norm: 0.0,
            l1_norm: 0.0,
            iterations: 0,
            converged,
            trace: SolveTrace::default(),
        }
    }

    /// Indices of nonzero entries of the estimate.
    pub fn support(&self) -> Vec<usize> {
        (0..self.x_hat.len()).filter(|&j| self.x_hat[j] != 0.0).collect()
    }
}

/// `10 log10(1 / MSE)` for unit peak; `+∞` for identical images.
pub fn psnr(a: &Image, b: &Image) -> Result<f64> {
    if a.width() != b.width() || a.height() != b.height() {
        return Err(Error::DimensionMismatch {
            what: "image pixel count",
            expected: a.pixels().len(),
            found: b.pixels().len(),
        });
    }
    Ok(psnr_slices(a.pixels(), b.pixels()))
}

pub(crate) fn psnr_slices(a: &[f64], b: &[f64]) -> f64 {
    let mse = a
        .iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        / a.len().max(1) as f64;
    if mse == 0.0 {
        f64::INFINITY
    } else {
        10.0 * math::log10(1.0 / mse)
    }
}

/// Recovered image along with the solver report.
#[derive(Debug, Clone)]
pub struct Reconstruction {
    raw: Image,
    pub result: RecoveryResult,
}

impl Reconstruction {
    /// Unclipped synthesis of the recovered coefficients.
    pub fn raw(&self) -> &Image {
        &self.raw
    }

    /// Display copy clipped to `[0, 1]`.
    pub fn display(&self) -> Image {
        self.raw.clipped()
    }

    /// PSNR of the unclipped reconstruction against `original`.
    pub fn psnr(&self, original: &Image) -> Result<f64> {
        psnr(original, &self.raw)
    }
}

/// Basis pursuit on the measurements followed by the inverse transform.
/// Holds the solver so square-operator factorisations are reused.
pub struct Reconstructor<'a> {
    transform: Transform2d,
    solver: BasisPursuit<'a, SensingOperator>,
    op: &'a SensingOperator,
}

impl<'a> Reconstructor<'a> {
    pub fn new(op: &'a SensingOperator, transform: Transform2d, opts: SolverOptions) -> Result<Self> {
        if op.n() != transform.len() {
            return Err(Error::DimensionMismatch {
                what: "operator width",
                expected: transform.len(),
                found: op.n(),
            });
        }
        Ok(Self {
            transform,
            solver: BasisPursuit::new(op, opts)?,
            op,
        })
    }

    pub fn reconstruct(&self, sample: &CompressedSample) -> Result<Reconstruction> {
        if sample.m() != self.op.m() {
            return Err(Error::DimensionMismatch {
                what: "sample length",
                expected: self.op.m(),
                found: sample.m(),
            });
        }
        let result = self.solver.solve(&sample.y)?;
        let pixels = self.transform.inverse(&result.x_hat)?;
        let side = self.transform.side();
        Ok(Reconstruction {
            raw: Image::new(side, side, pixels)?,
            result,
        })
    }
}

pub fn reconstruct_image(
    sample: &CompressedSample,
    op: &SensingOperator,
    spec: &WaveletSpec,
    level: usize,
    side: usize,
    opts: &SolverOptions,
) -> Result<Reconstruction> {
    let transform = Transform2d::new(spec.clone(), side, level)?;
    Reconstructor::new(op, transform, opts.clone())?.reconstruct(sample)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn psnr_values() {
        let z = Image::zeros(4);
        assert_eq!(psnr(&z, &z).unwrap(), f64::INFINITY);
        assert!(psnr(&z, &Image::filled(4, 4, 1.0)).unwrap().abs() < 1e-12);
        let half = psnr(&z, &Image::filled(4, 4, 0.5)).unwrap();
        assert!((half - 10.0 * libm::log10(4.0)).abs() < 1e-12);
        assert!((half - 6.02).abs() < 0.005);
        assert!(psnr(&z, &Image::zeros(2)).is_err());
    }

    #[test]
    fn default_options_are_valid() {
        SolverOptions::default().validate().unwrap();
        let bad = SolverOptions {
            step_bounds: (1.0, 1.0),
            ..SolverOptions::default()
        };
        assert!(bad.validate().is_err());
    }
}
