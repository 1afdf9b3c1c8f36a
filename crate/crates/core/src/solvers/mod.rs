//! ADMM solvers for the tensor recovery models.
//!
//! All solvers share [`SolverConfig`] for the penalty schedule and stopping
//! rule and return a [`SolverReport`] with per-iteration traces. The nuclear
//! norm term of every model is the tensor nuclear norm scaled by `1/n3`,
//! whose proximal map is [`tsvt`](crate::shrink::tsvt) with threshold `1/μ`.

mod derain;
mod hsi;
mod lrtc;
mod scene;
mod trpca;
mod wtnn;

pub use derain::{derain, DerainParams, DerainResult};
pub use hsi::{hsi_mixed_denoise, HsiParams, HsiResult, PatchSpec};
pub use lrtc::lrtc;
pub use scene::{foreground_mask, mod_decompose, ModParams, ModResult};
pub use trpca::{trpca, trpca_lambda};
pub use wtnn::wtnn_denoise;

use crate::error::{Error, Result};
use crate::tensor::Tensor3;

/// Penalty schedule and stopping rule shared by every ADMM solver.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    /// Initial penalty `μ0`.
    pub mu0: f64,
    /// Penalty growth factor per iteration.
    pub rho: f64,
    pub mu_max: f64,
    /// Stopping tolerance on the max-norm of constraint residuals and
    /// iterate changes.
    pub tol: f64,
    pub max_iter: usize,
    /// Seed for any randomized step (k-means restarts in clustering).
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            mu0: 1e-3,
            rho: 1.1,
            mu_max: 1e10,
            tol: 1e-7,
            max_iter: 500,
            seed: 0,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.mu0 > 0.0
            && self.mu0.is_finite()
            && self.rho >= 1.0
            && self.rho.is_finite()
            && self.mu_max >= self.mu0
            && self.tol > 0.0
            && self.max_iter >= 1;
        if !ok {
            return Err(Error::InvalidArgument(format!("invalid solver config {self:?}")));
        }
        Ok(())
    }

    pub(crate) fn penalty(&self) -> Penalty {
        Penalty {
            mu: self.mu0,
            rho: self.rho,
            max: self.mu_max,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct Penalty {
    pub mu: f64,
    rho: f64,
    max: f64,
}

impl Penalty {
    pub fn grow(&mut self) {
        self.mu = (self.mu * self.rho).min(self.max);
    }
}

/// Per-run diagnostics.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SolverReport {
    pub iterations: usize,
    /// Max-norm of the constraint residuals after each iteration.
    pub residuals: Vec<f64>,
    /// Model objective after each iteration, evaluated at the iterate made
    /// feasible for the data constraint.
    pub objectives: Vec<f64>,
    pub final_objective: f64,
    pub converged: bool,
}

impl SolverReport {
    pub(crate) fn record(&mut self, residual: f64, objective: f64) {
        self.iterations += 1;
        self.residuals.push(residual);
        self.objectives.push(objective);
        self.final_objective = objective;
    }

    /// Largest increase between consecutive objective values, relative to
    /// `max(1, |f|)`; zero for a non-increasing trace.
    pub fn max_objective_increase(&self) -> f64 {
        self.objectives
            .windows(2)
            .map(|w| (w[1] - w[0]) / w[0].abs().max(1.0))
            .fold(0.0, f64::max)
    }
}

pub(crate) fn check_weight(name: &str, v: f64) -> Result<()> {
    if !(v >= 0.0) || !v.is_finite() {
        return Err(Error::InvalidArgument(format!("{name} must be finite and >= 0, got {v}")));
    }
    Ok(())
}

/// `max |a − b|` over entries.
pub(crate) fn change(a: &Tensor3, b: &Tensor3) -> f64 {
    a.max_abs_diff(b)
}

/// Default sparse weight `1/√(max(n1, n2)·n3)`.
pub fn default_sparse_weight(dims: (usize, usize, usize)) -> f64 {
    1.0 / ((dims.0.max(dims.1) * dims.2) as f64).sqrt()
}
