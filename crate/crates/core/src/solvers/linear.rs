use super::gd::{gradient_descent, Check, LinearOperator};
use super::{build_preconditioner_with, check_tall, Preconditioner, SolveOptions, SolveReport, StageRecord, StopReason};
use crate::error::check_unit_interval;
use crate::linalg::{mat_t_vec, mat_vec, norm};
use crate::{DenseMatrix, Error, Result};
use std::time::Instant;

/// `A·R` applied without forming it.
pub(crate) struct PreconditionedMatrix<'a> {
    pub a: &'a DenseMatrix,
    pub p: &'a Preconditioner,
}

impl LinearOperator for PreconditionedMatrix<'_> {
    fn nrows(&self) -> usize {
        self.a.nrows()
    }

    fn ncols(&self) -> usize {
        self.a.ncols()
    }

    fn apply(&self, z: &[f64]) -> Vec<f64> {
        mat_vec(self.a, &self.p.apply_r(z))
    }

    fn apply_transpose(&self, y: &[f64]) -> Vec<f64> {
        self.p.apply_r_t(&mat_t_vec(self.a, y))
    }
}

/// Solves `min ‖Ax − b‖₂` to within a `(1 + eps1)` factor of the optimum.
///
/// Starts from the sketched solution `z₀ = argmin ‖S·A·R·z − S·b‖` and runs
/// gradient descent on `‖A·R·z − b‖²`. The stop is certified: with
/// `r = A·R·z − b` and `g = (A·R)ᵀr`, the excess `‖r‖² − OPT²` is at most
/// `(‖g‖/σ)²` where `σ = 1 − 3ε_ose` bounds `σ_min(A·R)` from below.
pub fn fast_linear_regression(
    a: &DenseMatrix,
    b: &[f64],
    eps1: f64,
    delta1: f64,
    opts: &SolveOptions,
) -> Result<SolveReport> {
    let started = Instant::now();
    check_tall(a)?;
    check_unit_interval("eps1", eps1, 0.1)?;
    check_unit_interval("delta1", delta1, 0.1)?;
    if b.len() != a.nrows() {
        return Err(Error::Dimension(format!(
            "A has {} rows, b has length {}",
            a.nrows(),
            b.len()
        )));
    }
    let (stage, x, residual) = linear_stage(a, b, eps1, delta1, opts)?;
    Ok(SolveReport::from_stages(x, residual, norm(b), vec![stage], Vec::new(), started))
}

/// One least-squares solve, returning its record, solution and residual `‖Ax − b‖`.
pub(crate) fn linear_stage(
    a: &DenseMatrix,
    b: &[f64],
    eps1: f64,
    delta1: f64,
    opts: &SolveOptions,
) -> Result<(StageRecord, Vec<f64>, f64)> {
    let p = build_preconditioner_with(a, delta1 / 2.0, opts.seed, &opts.config)?;
    linear_stage_with(a, b, eps1, delta1, opts, &p)
}

/// [`linear_stage`] with a preconditioner built by the caller.
pub(crate) fn linear_stage_with(
    a: &DenseMatrix,
    b: &[f64],
    eps1: f64,
    delta1: f64,
    opts: &SolveOptions,
    p: &Preconditioner,
) -> Result<(StageRecord, Vec<f64>, f64)> {
    let cfg = &opts.config;
    let b_norm = norm(b);
    let kappa = match opts.kappa {
        Some(k) => k,
        None => {
            let (lo, hi) = p.estimated_singular_range();
            hi / lo
        }
    };
    let max_iter = cfg.iteration_cap(kappa, eps1);
    let mut record = StageRecord {
        name: "linear".into(),
        eps: eps1,
        delta: delta1,
        tolerance: eps1,
        iterations: 0,
        max_iterations: max_iter,
        relative_residual: 0.0,
        stop: StopReason::ZeroRhs,
        sketch_rows: p.sketch_dim(),
        solution_norm: 0.0,
    };
    if b_norm == 0.0 {
        return Ok((record, vec![0.0; a.ncols()], 0.0));
    }

    let sb = p.sketch().apply_vec(b)?;
    let z0 = mat_t_vec(p.sketched_basis(), &sb);
    let op = PreconditionedMatrix { a, p };
    let sigma_lo = (1.0 - 3.0 * cfg.eps_ose).max(f64::MIN_POSITIVE);
    let slack = (1.0 + eps1).powi(2) - 1.0;
    let floor = cfg.tolerance_floor * b_norm;
    let out = gradient_descent(&op, b, z0, max_iter, cfg.stall_window, |_, r, g| {
        let rn = norm(r);
        let excess = norm(g) / sigma_lo;
        let done = (1.0 + eps1).powi(2) * excess * excess <= slack * rn * rn || rn <= floor;
        Check {
            metric: excess,
            done,
        }
    });
    let x = p.apply_r(&out.solution);
    let mut r = mat_vec(a, &x);
    r.iter_mut().zip(b).for_each(|(ri, bi)| *ri -= bi);
    let residual = norm(&r);
    record.iterations = out.iterations;
    record.relative_residual = residual / b_norm;
    record.stop = out.stop;
    record.solution_norm = norm(&x);
    Ok((record, x, residual))
}
