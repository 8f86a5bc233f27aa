use crate::args::{Constants, Shape};
use crate::output::Outcome;
use crate::row;
use apkr::io::{read_matrix, read_vector, write_vector};
use apkr::kernel::{attention_kernel_regression, kernel_apply, KernelReport};
use apkr::linalg::{norm, sub};
use apkr::oracle::{apply_power, dense_power_matrix, gaussian_vec, gen_capped_rows, gen_matrix, svd_lstsq, Parity, MAX_DENSE_KERNEL};
use apkr::power::{even_powers, four_matrices, odd_powers, three_matrices};
use apkr::rng::{derive_seed, label};
use apkr::solvers::{SolveOptions, SolveReport};
use apkr::{DenseMatrix, Error, Result};
use clap::{Args, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;
use std::path::PathBuf;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Problem {
    /// min ‖(AᵀA)ʲx − b‖
    Even,
    /// min ‖A(AᵀA)ʲx − b‖
    Odd,
    /// min ‖AAᵀAx − b‖
    Three,
    /// min ‖AᵀAAᵀAx − b‖
    Four,
    /// min ‖exp(AAᵀ)x − b‖
    Kernel,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Rhs {
    /// Standard Gaussian b.
    Gaussian,
    /// b = M·x for the problem's matrix M and a Gaussian x, plus `--noise`.
    Planted,
}

#[derive(Args, Debug)]
pub struct SolveArgs {
    #[arg(value_enum)]
    pub problem: Problem,
    /// Matrix file; generated from --n/--d/--kappa when absent.
    #[arg(long)]
    pub a: Option<PathBuf>,
    /// Right-hand side file; drawn per run when absent.
    #[arg(long)]
    pub b: Option<PathBuf>,
    #[command(flatten)]
    pub shape: Shape,
    /// Power j for even and odd problems.
    #[arg(long, default_value_t = 1)]
    pub j: usize,
    #[arg(long, default_value_t = 1e-6)]
    pub eps: f64,
    #[arg(long, default_value_t = 0.05)]
    pub delta: f64,
    /// Number of seeded runs.
    #[arg(long, default_value_t = 1)]
    pub seeds: usize,
    #[arg(long, value_enum, default_value_t = Rhs::Gaussian)]
    pub rhs: Rhs,
    /// Relative size of the noise added to a planted right-hand side.
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,
    /// Writes the solution of a single run to this file.
    #[arg(long)]
    pub solution: Option<PathBuf>,
    #[command(flatten)]
    pub constants: Constants,
}

/// Dense check of one solution against its guarantee.
#[derive(Clone, Debug, Serialize)]
pub struct OracleCheck {
    pub exact_residual: f64,
    pub relative_residual: f64,
    /// Optimal cost for the odd problems.
    pub opt: Option<f64>,
    pub bound: f64,
    pub guarantee: bool,
}

#[derive(Serialize)]
#[serde(untagged)]
enum Report {
    Power(SolveReport),
    Kernel(KernelReport),
}

impl Report {
    fn base(&self) -> &SolveReport {
        match self {
            Report::Power(r) => r,
            Report::Kernel(r) => &r.report,
        }
    }
}

#[derive(Serialize)]
struct Run {
    index: usize,
    n: usize,
    d: usize,
    instance_seed: u64,
    solver_seed: u64,
    report: Report,
    oracle: Option<OracleCheck>,
}

#[derive(Serialize)]
struct Summary {
    problem: Problem,
    n: usize,
    d: usize,
    j: usize,
    eps: f64,
    delta: f64,
    seed: u64,
    runs_total: usize,
    guarantees_checked: usize,
    guarantees_met: usize,
    /// Smallest number of met guarantees consistent with failure probability δ.
    required: usize,
    passed: bool,
    runs: Vec<Run>,
}

fn matrix_of(problem: Problem, j: usize) -> (usize, Parity) {
    match problem {
        Problem::Even | Problem::Kernel => (j, Parity::Even),
        Problem::Odd => (j, Parity::Odd),
        Problem::Three => (1, Parity::Odd),
        Problem::Four => (2, Parity::Even),
    }
}

fn rhs_len(problem: Problem, a: &DenseMatrix) -> usize {
    match problem {
        Problem::Even | Problem::Four => a.ncols(),
        _ => a.nrows(),
    }
}

fn instance(args: &SolveArgs, index: usize, seed: u64) -> Result<DenseMatrix> {
    if let Some(path) = &args.a {
        return read_matrix(path);
    }
    let s = derive_seed(seed, label::INSTANCE, index as u64);
    match args.problem {
        Problem::Kernel => Ok(gen_capped_rows(args.shape.n, args.shape.d, 1.0, s)),
        _ => gen_matrix(args.shape.n, args.shape.d, args.shape.kappa, s),
    }
}

fn right_hand_side(args: &SolveArgs, a: &DenseMatrix, index: usize, seed: u64) -> Result<Vec<f64>> {
    let len = rhs_len(args.problem, a);
    if let Some(path) = &args.b {
        let b = read_vector(path)?;
        if b.len() != len {
            return Err(Error::Dimension(format!("b has length {}, expected {len}", b.len())));
        }
        return Ok(b);
    }
    let s = derive_seed(seed, label::RHS, index as u64);
    let mut b = match (args.rhs, args.problem) {
        (Rhs::Gaussian, _) => return Ok(gaussian_vec(len, s)),
        (Rhs::Planted, Problem::Kernel) => kernel_apply(a, &gaussian_vec(a.nrows(), s)),
        (Rhs::Planted, p) => {
            let (j, parity) = matrix_of(p, args.j);
            apply_power(a, &gaussian_vec(a.ncols(), s), j, parity)
        }
    };
    if args.noise > 0.0 {
        let e = gaussian_vec(len, derive_seed(s, label::RHS, 1));
        let scale = args.noise * norm(&b) / norm(&e).max(f64::MIN_POSITIVE);
        b.iter_mut().zip(&e).for_each(|(bi, ei)| *bi += scale * ei);
    }
    Ok(b)
}

/// Compares a solution with the dense guarantee for its problem. `None` when
/// the instance is too large for dense verification.
pub fn oracle_check(problem: Problem, a: &DenseMatrix, b: &[f64], x: &[f64], j: usize, eps: f64) -> Result<Option<OracleCheck>> {
    if a.nrows() > MAX_DENSE_KERNEL {
        return Ok(None);
    }
    let b_norm = norm(b);
    let (residual, opt, bound) = if problem == Problem::Kernel {
        let r = norm(&sub(&kernel_apply(a, x), b));
        (r, None, eps * b_norm)
    } else {
        let (power, parity) = matrix_of(problem, j);
        let m = dense_power_matrix(a, power, parity)?;
        let mx = &m * nalgebra::DVector::from_column_slice(x);
        let r = norm(&sub(mx.as_slice(), b));
        match parity {
            Parity::Even => (r, None, eps * b_norm),
            Parity::Odd => {
                let opt = svd_lstsq(&m, b, None)?.exact_cost;
                (r, Some(opt), (1.0 + eps) * opt + eps * b_norm)
            }
        }
    };
    Ok(Some(OracleCheck {
        exact_residual: residual,
        relative_residual: if b_norm > 0.0 { residual / b_norm } else { residual },
        opt,
        bound,
        guarantee: residual <= bound,
    }))
}

fn solve_one(args: &SolveArgs, index: usize, seed: u64) -> Result<(Run, Vec<f64>)> {
    let a = instance(args, index, seed)?;
    let b = right_hand_side(args, &a, index, seed)?;
    let solver_seed = derive_seed(seed, label::TRIAL, index as u64);
    let mut opts = SolveOptions::seeded(solver_seed).with_config(args.constants.solver());
    opts.kappa = args.constants.kappa_hint;
    let report = match args.problem {
        Problem::Even => Report::Power(even_powers(&a, &b, args.j, args.eps, args.delta, &opts)?),
        Problem::Odd => Report::Power(odd_powers(&a, &b, args.j, args.eps, args.delta, &opts)?),
        Problem::Three => Report::Power(three_matrices(&a, &b, args.eps, args.delta, &opts)?),
        Problem::Four => Report::Power(four_matrices(&a, &b, args.eps, args.delta, &opts)?),
        Problem::Kernel => Report::Kernel(attention_kernel_regression(
            &a,
            &b,
            args.eps,
            args.delta,
            solver_seed,
            &args.constants.kernel(),
        )?),
    };
    let x = report.base().solution.clone();
    let oracle = oracle_check(args.problem, &a, &b, &x, args.j, args.eps)?;
    Ok((
        Run {
            index,
            n: a.nrows(),
            d: a.ncols(),
            instance_seed: derive_seed(seed, label::INSTANCE, index as u64),
            solver_seed,
            report,
            oracle,
        },
        x,
    ))
}

pub fn run(args: &SolveArgs, seed: u64) -> Result<Outcome> {
    if args.seeds == 0 {
        return Err(Error::Parameter("--seeds must be positive".into()));
    }
    if args.solution.is_some() && args.seeds != 1 {
        return Err(Error::Parameter("--solution needs a single run".into()));
    }
    let results: Vec<(Run, Vec<f64>)> = (0..args.seeds)
        .into_par_iter()
        .map(|i| solve_one(args, i, seed))
        .collect::<Result<_>>()?;
    if let (Some(path), Some((_, x))) = (&args.solution, results.first()) {
        write_vector(path, x)?;
    }
    let runs: Vec<Run> = results.into_iter().map(|(r, _)| r).collect();

    let checked = runs.iter().filter(|r| r.oracle.is_some()).count();
    let met = runs.iter().filter(|r| r.oracle.as_ref().is_some_and(|o| o.guarantee)).count();
    let required = ((1.0 - args.delta) * checked as f64).ceil() as usize;
    let rows = runs
        .iter()
        .map(|r| {
            let base = r.report.base();
            row!(
                "index" => r.index,
                "instance_seed" => r.instance_seed,
                "iterations" => base.iterations,
                "relative_residual" => base.relative_residual,
                "converged" => base.converged,
                "wall_time" => base.wall_time,
                "exact_residual" => r.oracle.as_ref().map(|o| o.exact_residual),
                "bound" => r.oracle.as_ref().map(|o| o.bound),
                "guarantee" => r.oracle.as_ref().map(|o| o.guarantee),
            )
        })
        .collect();
    let (n, d) = (runs[0].n, runs[0].d);
    let passed = met >= required;
    let summary = Summary {
        problem: args.problem,
        n,
        d,
        j: args.j,
        eps: args.eps,
        delta: args.delta,
        seed,
        runs_total: runs.len(),
        guarantees_checked: checked,
        guarantees_met: met,
        required,
        passed,
        runs,
    };
    Ok(Outcome::new(summary, rows, passed))
}
