use crate::args::Constants;
use crate::output::Outcome;
use crate::row;
use apkr::kernel::{attention_kernel_regression, exact_attention_kernel};
use apkr::oracle::{dense_power_matrix, gaussian_vec, gen_capped_rows, gen_matrix, Parity, MAX_DENSE_KERNEL};
use apkr::power::even_powers;
use apkr::rng::{derive_seed, label};
use apkr::solvers::{fast_psd_regression, SolveOptions, SolverConfig};
use apkr::{DenseMatrix, Error, Result};
use clap::{Args, ValueEnum};
use nalgebra::DVector;
use serde::Serialize;
use serde_json::{Map, Value};
use std::time::Instant;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Sweep {
    /// Rows of A; values are n.
    N,
    /// Final accuracy; values are eps.
    Eps,
    /// Power; values are j.
    J,
    /// Kernel regression; values are n.
    Kernel,
}

#[derive(Args, Debug)]
pub struct BenchArgs {
    #[arg(value_enum)]
    pub sweep: Sweep,
    /// Comma-separated sweep values (defaults depend on the sweep).
    #[arg(long, value_delimiter = ',')]
    pub values: Vec<f64>,
    #[arg(long, default_value_t = 1024)]
    pub n: usize,
    #[arg(long, default_value_t = 16)]
    pub d: usize,
    #[arg(long, default_value_t = 30.0)]
    pub kappa: f64,
    #[arg(long, default_value_t = 1)]
    pub j: usize,
    /// Final accuracy (default 1e-6, or 0.1 for the kernel sweep).
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long, default_value_t = 0.05)]
    pub delta: f64,
    /// Timed repetitions per row; the fastest is reported.
    #[arg(long, default_value_t = 3)]
    pub reps: usize,
    /// Skip the dense baseline column.
    #[arg(long)]
    pub no_baseline: bool,
    #[command(flatten)]
    pub constants: Constants,
}

#[derive(Serialize)]
struct Table {
    sweep: Sweep,
    seed: u64,
    reps: usize,
    rows: Vec<Map<String, Value>>,
}

/// Fastest of `reps` runs in seconds, with the last result.
fn timed<T>(reps: usize, mut f: impl FnMut() -> Result<T>) -> Result<(f64, T)> {
    let mut best = f64::INFINITY;
    let mut out = None;
    for _ in 0..reps.max(1) {
        let start = Instant::now();
        let value = f()?;
        best = best.min(start.elapsed().as_secs_f64());
        out = Some(value);
    }
    Ok((best, out.expect("at least one repetition")))
}

/// Repeated squaring `(AᵀA)ʲ` followed by an LU solve.
fn dense_power_solve(a: &DenseMatrix, b: &[f64], j: usize) -> Result<Vec<f64>> {
    let m = dense_power_matrix(a, j, Parity::Even)?;
    m.lu()
        .solve(&DVector::from_column_slice(b))
        .map(|x| x.as_slice().to_vec())
        .ok_or_else(|| Error::Rank("dense power matrix is singular".into()))
}

/// Seconds per gradient step of the PSD solver: a least-squares slope of
/// wall time against iteration count over runs capped at 5..=85 steps. The
/// target is unreachable so every run uses its full cap.
fn per_iteration_time(a: &DenseMatrix, b: &[f64], args: &BenchArgs, seed: u64) -> Result<f64> {
    let mut points = Vec::new();
    for cap in [5usize, 25, 45, 65, 85] {
        let config = SolverConfig {
            max_iterations: Some(cap),
            stall_window: usize::MAX,
            ..args.constants.solver()
        };
        let opts = SolveOptions::seeded(seed).with_config(config);
        let (t, rep) = timed(args.reps, || fast_psd_regression(a, b, 1e-300, args.delta, &opts))?;
        points.push((rep.iterations as f64, t));
    }
    let k = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / k;
    let my = points.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    Ok(if sxx > 0.0 { sxy / sxx } else { f64::NAN })
}

fn values<T>(args: &BenchArgs, default: &[T], convert: impl Fn(f64) -> Option<T>) -> Result<Vec<T>>
where
    T: Copy,
{
    if args.values.is_empty() {
        return Ok(default.to_vec());
    }
    args.values
        .iter()
        .map(|&v| convert(v).ok_or_else(|| Error::Parameter(format!("invalid sweep value {v}"))))
        .collect()
}

fn power_eps(args: &BenchArgs) -> f64 {
    args.eps.unwrap_or(1e-6)
}

fn count(v: f64) -> Option<usize> {
    (v >= 1.0 && v.fract() == 0.0).then_some(v as usize)
}

pub fn run(args: &BenchArgs, seed: u64) -> Result<Outcome> {
    let mut rows = match args.sweep {
        Sweep::N => sweep_n(args, seed)?,
        Sweep::Eps => sweep_eps(args, seed)?,
        Sweep::J => sweep_j(args, seed)?,
        Sweep::Kernel => sweep_kernel(args, seed)?,
    };
    add_ratios(&mut rows);
    let table = Table {
        sweep: args.sweep,
        seed,
        reps: args.reps,
        rows: rows.clone(),
    };
    Ok(Outcome::new(table, rows, true))
}

/// Ratio of each row's timing columns to the previous row's.
fn add_ratios(rows: &mut [Map<String, Value>]) {
    for key in ["total_time", "per_iteration_time"] {
        let times: Vec<Option<f64>> = rows.iter().map(|r| r.get(key).and_then(Value::as_f64)).collect();
        for (i, row) in rows.iter_mut().enumerate() {
            let ratio = match (i.checked_sub(1).and_then(|p| times[p]), times[i]) {
                (Some(prev), Some(cur)) if prev > 0.0 => Some(cur / prev),
                _ => None,
            };
            if row.contains_key(key) {
                row.insert(format!("{key}_ratio"), serde_json::json!(ratio));
            }
        }
    }
}

fn instance(n: usize, d: usize, kappa: f64, seed: u64) -> Result<(DenseMatrix, Vec<f64>)> {
    let a = gen_matrix(n, d, kappa, derive_seed(seed, label::INSTANCE, n as u64))?;
    let b = gaussian_vec(d, derive_seed(seed, label::RHS, n as u64));
    Ok((a, b))
}

fn options(args: &BenchArgs, seed: u64) -> SolveOptions {
    let mut opts = SolveOptions::seeded(seed).with_config(args.constants.solver());
    opts.kappa = args.constants.kappa_hint;
    opts
}

fn baseline(args: &BenchArgs, a: &DenseMatrix, b: &[f64], j: usize) -> Result<Option<f64>> {
    if args.no_baseline {
        return Ok(None);
    }
    timed(args.reps, || dense_power_solve(a, b, j)).map(|(t, _)| Some(t))
}

fn sweep_n(args: &BenchArgs, seed: u64) -> Result<Vec<Map<String, Value>>> {
    let ns = values(args, &[512, 1024, 2048], count)?;
    let mut rows = Vec::new();
    for n in ns {
        let (a, b) = instance(n, args.d, args.kappa, seed)?;
        let (total, rep) = timed(args.reps, || even_powers(&a, &b, args.j, power_eps(args), args.delta, &options(args, seed)))?;
        let per_iter = per_iteration_time(&a, &b, args, seed)?;
        rows.push(row!(
            "n" => n,
            "d" => args.d,
            "j" => args.j,
            "iterations" => rep.iterations,
            "total_time" => total,
            "per_iteration_time" => per_iter,
            "dense_time" => baseline(args, &a, &b, args.j)?,
            "relative_residual" => rep.relative_residual,
        ));
    }
    Ok(rows)
}

fn sweep_eps(args: &BenchArgs, seed: u64) -> Result<Vec<Map<String, Value>>> {
    let eps_values = values(args, &[1e-2, 1e-4, 1e-6, 1e-8, 1e-10], |v| (v > 0.0 && v < 0.1).then_some(v))?;
    let (a, b) = instance(args.n, args.d, args.kappa, seed)?;
    let dense = baseline(args, &a, &b, args.j)?;
    let mut rows = Vec::new();
    let mut previous: Option<usize> = None;
    for eps in eps_values {
        let (total, rep) = timed(args.reps, || even_powers(&a, &b, args.j, eps, args.delta, &options(args, seed)))?;
        rows.push(row!(
            "eps" => eps,
            "iterations" => rep.iterations,
            "iteration_step" => previous.map(|p| rep.iterations as i64 - p as i64),
            "total_time" => total,
            "dense_time" => dense,
            "relative_residual" => rep.relative_residual,
        ));
        previous = Some(rep.iterations);
    }
    Ok(rows)
}

fn sweep_j(args: &BenchArgs, seed: u64) -> Result<Vec<Map<String, Value>>> {
    let js = values(args, &[1, 2, 3, 4, 5], count)?;
    let (a, b) = instance(args.n, args.d, args.kappa, seed)?;
    let mut rows = Vec::new();
    for j in js {
        let (total, rep) = timed(args.reps, || even_powers(&a, &b, j, power_eps(args), args.delta, &options(args, seed)))?;
        rows.push(row!(
            "j" => j,
            "iterations" => rep.iterations,
            "total_time" => total,
            "dense_time" => baseline(args, &a, &b, j)?,
            "relative_residual" => rep.relative_residual,
        ));
    }
    Ok(rows)
}

fn sweep_kernel(args: &BenchArgs, seed: u64) -> Result<Vec<Map<String, Value>>> {
    let ns = values(args, &[64, 128, 256], count)?;
    let eps = args.eps.unwrap_or(0.1);
    let mut rows = Vec::new();
    for n in ns {
        let a = gen_capped_rows(n, args.d, 1.0, derive_seed(seed, label::INSTANCE, n as u64));
        let b = gaussian_vec(n, derive_seed(seed, label::RHS, n as u64));
        let cfg = args.constants.kernel();
        let (total, rep) = timed(args.reps, || attention_kernel_regression(&a, &b, eps, args.delta, seed, &cfg))?;
        let dense = if args.no_baseline || n > MAX_DENSE_KERNEL {
            None
        } else {
            Some(
                timed(args.reps, || {
                    Ok(exact_attention_kernel(&a).lu().solve(&DVector::from_column_slice(&b)))
                })?
                .0,
            )
        };
        rows.push(row!(
            "n" => n,
            "d" => args.d,
            "eps" => eps,
            "q" => rep.q,
            "factor_rows" => rep.factor_rows,
            "branch" => format!("{:?}", rep.branch).to_lowercase(),
            "iterations" => rep.report.iterations,
            "refinement_iterations" => rep.refinement_iterations,
            "total_time" => total,
            "dense_time" => dense,
            "factor_residual" => rep.factor_residual,
            "kernel_residual" => rep.kernel_residual,
        ));
    }
    Ok(rows)
}
