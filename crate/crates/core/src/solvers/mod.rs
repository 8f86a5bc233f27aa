//! Sketch-and-precondition solvers for `min ‖Ax − b‖₂` and `min ‖AᵀAx − b‖₂`.
//!
//! Both solvers sketch `A` with an SRHT, QR-factor the sketch to get a
//! preconditioner `R` with `A·R` nearly orthonormal, and then run plain
//! gradient descent on the preconditioned problem while watching the true
//! residual.

mod budget;
mod gd;
mod kappa;
mod linear;
mod precond;
mod psd;
mod report;

pub use budget::{PrecisionBudget, StageBudget};
pub use gd::{gd_well_conditioned, gradient_descent, Check, GdOutcome, LinearOperator};
pub use kappa::estimate_condition;
pub use linear::fast_linear_regression;
pub use precond::{build_preconditioner, build_preconditioner_with, Preconditioner};
pub use psd::fast_psd_regression;
pub(crate) use linear::linear_stage_with;
pub(crate) use psd::psd_stage_with;
pub use report::{SolveReport, StageRecord, StopReason};

/// Tunable constants shared by every solver.
#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct SolverConfig {
    /// Distortion the preconditioning sketch is sized for.
    pub eps_ose: f64,
    /// Multiplier in the sketch size `⌈c·ε⁻²·d·ln(n/δ)⌉`.
    pub embedding_constant: f64,
    /// Forces a sampled sketch with exactly this many rows.
    pub sketch_rows: Option<usize>,
    /// Factor applied to condition-number estimates.
    pub kappa_inflation: f64,
    /// Smallest per-stage tolerance handed to an inner solve.
    pub tolerance_floor: f64,
    /// Largest accepted power `j`.
    pub max_power: usize,
    /// Iterations without progress before a solve is declared stalled.
    pub stall_window: usize,
    /// Overrides the iteration cap `10·⌈log₂(κ/ε)⌉ + 50`.
    pub max_iterations: Option<usize>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            eps_ose: 0.1,
            embedding_constant: crate::sketch::DEFAULT_EMBEDDING_CONSTANT,
            sketch_rows: None,
            kappa_inflation: 1.5,
            tolerance_floor: 1e-14,
            max_power: 16,
            stall_window: 20,
            max_iterations: None,
        }
    }
}

impl SolverConfig {
    pub(crate) fn iteration_cap(&self, kappa: f64, eps: f64) -> usize {
        self.max_iterations.unwrap_or_else(|| {
            let ratio = (kappa.max(1.0) / eps).log2().max(0.0);
            10 * ratio.ceil() as usize + 50
        })
    }
}

/// Seed, constants and (optionally) a known condition number for one call.
#[derive(Clone, Debug, Default)]
pub struct SolveOptions {
    pub seed: u64,
    pub config: SolverConfig,
    /// Condition number of `A` to use instead of estimating it.
    pub kappa: Option<f64>,
}

impl SolveOptions {
    pub fn seeded(seed: u64) -> Self {
        Self {
            seed,
            ..Self::default()
        }
    }

    pub fn with_config(mut self, config: SolverConfig) -> Self {
        self.config = config;
        self
    }

    pub fn with_kappa(mut self, kappa: f64) -> Self {
        self.kappa = Some(kappa);
        self
    }
}

pub(crate) fn check_tall(a: &crate::DenseMatrix) -> crate::Result<()> {
    if a.ncols() == 0 || a.nrows() < a.ncols() {
        return Err(crate::Error::Dimension(format!(
            "need n >= d >= 1, got a {}x{} matrix",
            a.nrows(),
            a.ncols()
        )));
    }
    Ok(())
}
