use super::factor::{build_kernel_factor, KernelConfig, KernelFactor};
use super::exact_attention_kernel;
use crate::error::check_unit_interval;
use crate::linalg::{mat_t_vec, mat_vec, norm, singular_values, sub, RANK_TOL};
use crate::oracle::MAX_DENSE_KERNEL;
use crate::rng::{derive_seed, label};
use crate::sketch::{Sketch, SrhtSketch};
use crate::solvers::{gradient_descent, Check, SolveReport, StageRecord, StopReason};
use crate::{DenseMatrix, Error, Result};
use nalgebra::{SymmetricEigen, SVD};
use serde::Serialize;
use std::time::Instant;

/// Largest `n` for which the exact-kernel residual is reported on the
/// iterative branch.
const REPORT_LIMIT: usize = 512;

/// Relative cutoff for singular values of `S·W_gᵀ`. Recovering `x` multiplies
/// by `Σ⁻²`, so keeping `σ ≥ τ·σ_max` costs about `u/τ²` in the residual while
/// dropping costs about `τ²`; `τ = u^{1/4}` balances the two.
pub const SVD_CUTOFF: f64 = 1e-4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelBranch {
    /// Factor has at least as many rows as points: dense solve.
    Dense,
    /// Sketch-preconditioned gradient descent.
    Iterative,
}

/// `R = U·Σ⁻²` from the thin SVD `S·W_gᵀ = U·Σ·Vᵀ`.
///
/// Gradient descent runs on `B = W_gᵀW_g·Sᵀ·R = W_gᵀ·V·Σ⁻¹`, whose nonzero
/// singular values are those of `W_gᵀ` restricted to the sketched subspace
/// and lie near 1 on the embedding event.
#[derive(Clone, Debug)]
pub struct KernelPreconditioner {
    pub sketch: SrhtSketch,
    pub u: DenseMatrix,
    pub sigma: Vec<f64>,
    pub v: DenseMatrix,
    pub r: DenseMatrix,
}

impl KernelPreconditioner {
    pub fn new(f: &KernelFactor, sketch: SrhtSketch) -> Result<Self> {
        let wt = f.to_dense().transpose();
        let swt = sketch.apply(&wt)?;
        let svd = SVD::new(swt, true, true);
        let u_full = svd.u.expect("requested U");
        let vt_full = svd.v_t.expect("requested Vᵀ");
        let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
        order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
        let smax = order.first().map(|&i| svd.singular_values[i]).unwrap_or(0.0);
        let keep: Vec<usize> = order
            .into_iter()
            .filter(|&i| smax > 0.0 && svd.singular_values[i] > SVD_CUTOFF * smax)
            .collect();
        if keep.is_empty() {
            return Err(Error::Rank("sketched kernel factor is zero".into()));
        }
        let sigma: Vec<f64> = keep.iter().map(|&i| svd.singular_values[i]).collect();
        let u = DenseMatrix::from_fn(u_full.nrows(), keep.len(), |r, c| u_full[(r, keep[c])]);
        let v = DenseMatrix::from_fn(vt_full.ncols(), keep.len(), |r, c| vt_full[(keep[c], r)]);
        let r = DenseMatrix::from_fn(u.nrows(), u.ncols(), |i, c| u[(i, c)] / (sigma[c] * sigma[c]));
        Ok(Self { sketch, u, sigma, v, r })
    }

    /// Dense `B = W_gᵀ·V·Σ⁻¹`.
    pub fn system(&self, f: &KernelFactor) -> DenseMatrix {
        let mut b = f.to_dense().transpose() * &self.v;
        for (c, s) in self.sigma.iter().enumerate() {
            b.column_mut(c).scale_mut(1.0 / s);
        }
        b
    }

    /// `x = Sᵀ·R·z`.
    pub fn recover(&self, z: &[f64]) -> Result<Vec<f64>> {
        self.sketch.apply_transpose_vec(&mat_vec(&self.r, z))
    }
}

/// Outcome of a kernel solve.
#[derive(Clone, Debug, Serialize)]
pub struct KernelReport {
    #[serde(flatten)]
    pub report: SolveReport,
    pub branch: KernelBranch,
    /// `‖W_gᵀW_g·x − y‖/‖y‖` at the returned solution.
    pub factor_residual: f64,
    /// `‖G·x − y‖/‖y‖` before refinement, when the exact kernel was formed.
    pub kernel_residual_unrefined: Option<f64>,
    /// `‖G·x − y‖/‖y‖` at the returned solution, when the exact kernel was formed.
    pub kernel_residual: Option<f64>,
    pub refinement_iterations: usize,
    pub q: usize,
    pub factor_rows: usize,
    pub inner_rows: Option<usize>,
    /// Condition number of the preconditioned system on the iterative branch.
    pub kappa_preconditioned: Option<f64>,
}

/// Spectral factorization of `W_gᵀW_g`, used as an exact inverse.
struct GramInverse {
    vectors: DenseMatrix,
    values: Vec<f64>,
}

impl GramInverse {
    fn new(f: &KernelFactor) -> Result<Self> {
        let eig = SymmetricEigen::new(f.gram());
        let values: Vec<f64> = eig.eigenvalues.iter().copied().collect();
        let lmax = values.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        let lmin = values.iter().fold(f64::INFINITY, |m, v| m.min(*v));
        if !(lmax > 0.0) || lmin <= RANK_TOL * lmax {
            return Err(Error::Rank(format!(
                "factor Gram eigenvalues span [{lmin:e}, {lmax:e}]"
            )));
        }
        Ok(Self {
            vectors: eig.eigenvectors,
            values,
        })
    }

    fn solve(&self, y: &[f64]) -> Vec<f64> {
        let mut c = mat_t_vec(&self.vectors, y);
        c.iter_mut().zip(&self.values).for_each(|(ci, l)| *ci /= l);
        mat_vec(&self.vectors, &c)
    }
}

fn relative(r: &[f64], y_norm: f64) -> f64 {
    if y_norm > 0.0 {
        norm(r) / y_norm
    } else {
        0.0
    }
}

/// Solves `W_gᵀW_g·x = y` to relative accuracy `eps`.
///
/// With `m ≥ n` factor rows the solve is dense. Otherwise an SRHT `S` sized
/// for distortion `config.eps0` preconditions gradient descent on
/// `min ‖B·z − y‖` with `B = W_gᵀW_g·Sᵀ·R`, and `x = Sᵀ·R·z`. When `m < n`
/// the approximate kernel is singular and `y` outside its range leaves a
/// positive least-squares residual, which is reported with a warning.
pub fn preconditioned_gd(
    f: &KernelFactor,
    y: &[f64],
    eps: f64,
    delta: f64,
    seed: u64,
    config: &KernelConfig,
) -> Result<KernelReport> {
    let started = Instant::now();
    check_unit_interval("eps", eps, 1.0)?;
    check_unit_interval("delta", delta, 1.0)?;
    let n = f.n();
    if y.len() != n {
        return Err(Error::Dimension(format!("factor has {n} points, y has length {}", y.len())));
    }
    let y_norm = norm(y);
    let mut warnings = Vec::new();
    let mut record = StageRecord {
        name: "kernel".into(),
        eps,
        delta,
        tolerance: eps,
        iterations: 0,
        max_iterations: 0,
        relative_residual: 0.0,
        stop: StopReason::Converged,
        sketch_rows: 0,
        solution_norm: 0.0,
    };

    let (x, branch, inner_rows, kappa) = if f.rows() >= n {
        let inverse = GramInverse::new(f)?;
        (inverse.solve(y), KernelBranch::Dense, None, None)
    } else {
        let m = f.rows();
        let sketch = match config.inner_rows {
            Some(s) => SrhtSketch::new(n, s, derive_seed(seed, label::INNER, 0))?,
            None => SrhtSketch::for_subspace(
                n,
                m,
                config.eps0,
                delta,
                config.embedding_constant,
                derive_seed(seed, label::INNER, 0),
            )?,
        };
        let pre = KernelPreconditioner::new(f, sketch)?;
        let b = pre.system(f);
        let s = singular_values(&b);
        let kappa_b = s[0] / s[s.len() - 1];
        let max_iter = config
            .max_iterations
            .unwrap_or(10 * (kappa_b / eps).log2().max(0.0).ceil() as usize + 50);
        let target = eps * y_norm;
        let out = gradient_descent(&b, y, vec![0.0; b.ncols()], max_iter, config.stall_window, |_, r, g| {
            let rn = norm(r);
            Check {
                metric: rn,
                done: rn <= target || norm(g) <= 1e-3 * eps * rn,
            }
        });
        record.iterations = out.iterations;
        record.max_iterations = max_iter;
        record.stop = out.stop;
        record.sketch_rows = pre.sketch.output_dim();
        (pre.recover(&out.solution)?, KernelBranch::Iterative, Some(pre.sketch.output_dim()), Some(kappa_b))
    };

    let factor_residual = relative(&sub(&f.gram_apply(&x), y), y_norm);
    if factor_residual > eps {
        warnings.push(format!(
            "factor residual {factor_residual:e} exceeds {eps:e}; y is not in the range of the approximate kernel"
        ));
    }
    record.relative_residual = factor_residual;
    record.solution_norm = norm(&x);
    let report = SolveReport::from_stages(x, factor_residual * y_norm, y_norm, vec![record], warnings, started);
    Ok(KernelReport {
        report,
        branch,
        factor_residual,
        kernel_residual_unrefined: None,
        kernel_residual: None,
        refinement_iterations: 0,
        q: f.q(),
        factor_rows: f.rows(),
        inner_rows,
        kappa_preconditioned: kappa,
    })
}

/// Solves `exp(A·Aᵀ)·x ≈ b` for rows of `A` in the unit ball.
///
/// The factor is built at `ε̂ = eps/4` and solved with [`preconditioned_gd`].
/// On the dense branch, when `n` allows forming the exact kernel `G`, the
/// solution is refined by `x ← x + (W_gᵀW_g)⁻¹(b − G·x)`; this converges
/// because `W_gᵀW_g` is within `1 ± ε̂` of `G`.
pub fn attention_kernel_regression(
    a: &DenseMatrix,
    b: &[f64],
    eps: f64,
    delta: f64,
    seed: u64,
    config: &KernelConfig,
) -> Result<KernelReport> {
    let started = Instant::now();
    check_unit_interval("eps", eps, 1.0)?;
    check_unit_interval("delta", delta, 1.0)?;
    let n = a.nrows();
    if b.len() != n {
        return Err(Error::Dimension(format!("A has {n} rows, b has length {}", b.len())));
    }
    let eps_hat = eps / 4.0;
    let f = build_kernel_factor(a, eps_hat, delta / 2.0, seed, config)?;
    let mut rep = preconditioned_gd(&f, b, eps_hat, delta / 2.0, derive_seed(seed, label::INNER, 1), config)?;
    let b_norm = norm(b);

    let refine = rep.branch == KernelBranch::Dense && config.refine && n <= MAX_DENSE_KERNEL;
    if refine || n <= REPORT_LIMIT {
        let g = exact_attention_kernel(a);
        let residual = |x: &[f64]| sub(b, &mat_vec(&g, x));
        let mut r = residual(&rep.report.solution);
        let unrefined = relative(&r, b_norm);
        rep.kernel_residual_unrefined = Some(unrefined);
        if refine {
            let inverse = GramInverse::new(&f)?;
            let target = eps_hat * b_norm;
            let mut best = norm(&r);
            while best > target && rep.refinement_iterations < config.max_refinements {
                let step = inverse.solve(&r);
                let candidate: Vec<f64> = rep.report.solution.iter().zip(&step).map(|(x, s)| x + s).collect();
                let r_new = residual(&candidate);
                rep.refinement_iterations += 1;
                if norm(&r_new) >= best {
                    rep.report
                        .warnings
                        .push(format!("refinement stopped improving at relative residual {:e}", best / b_norm));
                    break;
                }
                best = norm(&r_new);
                rep.report.solution = candidate;
                r = r_new;
            }
            rep.factor_residual = relative(&sub(&f.gram_apply(&rep.report.solution), b), b_norm);
        }
        let kernel_residual = relative(&r, b_norm);
        rep.kernel_residual = Some(kernel_residual);
        rep.report.residual = kernel_residual * b_norm;
        rep.report.relative_residual = kernel_residual;
        if kernel_residual > eps {
            rep.report.converged = false;
        }
    }
    rep.report.wall_time = started.elapsed().as_secs_f64();
    Ok(rep)
}
