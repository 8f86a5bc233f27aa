use super::gd::{gradient_descent, Check, LinearOperator};
use super::{build_preconditioner_with, check_tall, Preconditioner, SolveOptions, SolveReport, StageRecord, StopReason};
use crate::error::check_unit_interval;
use crate::linalg::{mat_t_vec, mat_vec, norm};
use crate::{DenseMatrix, Error, Result};
use std::cell::RefCell;
use std::time::Instant;

/// `B = RᵀAᵀA·R`, remembering the last `AᵀA·R·z` so the monitor can read the
/// true residual `AᵀA·x − b` without another product.
struct Gram<'a> {
    a: &'a DenseMatrix,
    p: &'a Preconditioner,
    last: RefCell<Vec<f64>>,
}

impl Gram<'_> {
    fn gram_r(&self, z: &[f64]) -> Vec<f64> {
        mat_t_vec(self.a, &mat_vec(self.a, &self.p.apply_r(z)))
    }
}

impl LinearOperator for Gram<'_> {
    fn nrows(&self) -> usize {
        self.a.ncols()
    }

    fn ncols(&self) -> usize {
        self.a.ncols()
    }

    fn apply(&self, z: &[f64]) -> Vec<f64> {
        let w = self.gram_r(z);
        let out = self.p.apply_r_t(&w);
        *self.last.borrow_mut() = w;
        out
    }

    fn apply_transpose(&self, y: &[f64]) -> Vec<f64> {
        self.p.apply_r_t(&self.gram_r(y))
    }
}

/// Solves `AᵀA·x = b2` until `‖AᵀA·x − b2‖ ≤ eps2·‖b2‖`.
///
/// Gradient descent runs on the preconditioned system
/// `RᵀAᵀA·R·z = Rᵀb2` from `z₀ = 0`; the true residual is tested every
/// iteration and `x = R·z` is returned.
pub fn fast_psd_regression(
    a: &DenseMatrix,
    b2: &[f64],
    eps2: f64,
    delta2: f64,
    opts: &SolveOptions,
) -> Result<SolveReport> {
    let started = Instant::now();
    check_tall(a)?;
    check_unit_interval("eps2", eps2, 0.1)?;
    check_unit_interval("delta2", delta2, 0.1)?;
    let (stage, x, residual) = psd_stage(a, b2, eps2, delta2, opts)?;
    Ok(SolveReport::from_stages(x, residual, norm(b2), vec![stage], Vec::new(), started))
}

/// One PSD solve without range checks on the tolerance, which chained
/// solvers may push far below `0.1`.
pub(crate) fn psd_stage(
    a: &DenseMatrix,
    b2: &[f64],
    tol: f64,
    delta: f64,
    opts: &SolveOptions,
) -> Result<(StageRecord, Vec<f64>, f64)> {
    if b2.len() != a.ncols() {
        return Err(Error::Dimension(format!(
            "A has {} columns, b has length {}",
            a.ncols(),
            b2.len()
        )));
    }
    let p = build_preconditioner_with(a, delta / 2.0, opts.seed, &opts.config)?;
    psd_stage_with(a, b2, tol, delta, opts, &p)
}

/// [`psd_stage`] with a preconditioner built by the caller.
pub(crate) fn psd_stage_with(
    a: &DenseMatrix,
    b2: &[f64],
    tol: f64,
    delta: f64,
    opts: &SolveOptions,
    p: &Preconditioner,
) -> Result<(StageRecord, Vec<f64>, f64)> {
    let cfg = &opts.config;
    let b_norm = norm(b2);
    let kappa = match opts.kappa {
        Some(k) => k,
        None => {
            let (lo, hi) = p.estimated_singular_range();
            hi / lo
        }
    };
    let max_iter = cfg.iteration_cap(kappa, tol);
    let mut record = StageRecord {
        name: "psd".into(),
        eps: tol,
        delta,
        tolerance: tol,
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

    let op = Gram {
        a,
        p,
        last: RefCell::new(Vec::new()),
    };
    let y = p.apply_r_t(b2);
    let target = tol * b_norm;
    let out = gradient_descent(&op, &y, vec![0.0; a.ncols()], max_iter, cfg.stall_window, |_, _, _| {
        let last = op.last.borrow();
        let metric = last.iter().zip(b2).map(|(w, b)| (w - b).powi(2)).sum::<f64>().sqrt();
        Check {
            metric,
            done: metric <= target,
        }
    });
    record.iterations = out.iterations;
    record.relative_residual = out.metric / b_norm;
    record.stop = out.stop;
    let x = p.apply_r(&out.solution);
    record.solution_norm = norm(&x);
    Ok((record, x, out.metric))
}
