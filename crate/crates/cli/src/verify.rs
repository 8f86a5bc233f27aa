use crate::args::{Constants, Shape};
use crate::output::Outcome;
use crate::row;
use apkr::kernel::{build_kernel_factor, exact_attention_kernel, kernel_entry_bound_check, psd_minor_check};
use apkr::linalg::{mat_vec, norm, sub};
use apkr::oracle::{apply_power, gaussian, gaussian_vec, gen_capped_rows, gen_matrix, spectral_sandwich, spectrum, svd_lstsq, Parity};
use apkr::power::even_power_chain;
use apkr::rng::{derive_seed, label};
use apkr::sketch::{check_embedding, check_famp, SrhtSketch};
use apkr::solvers::{fast_linear_regression, fast_psd_regression, SolveOptions};
use apkr::{Error, Result};
use clap::{Args, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{Map, Value};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    /// SRHT subspace embedding failure rate.
    Embedding,
    /// SRHT approximate matrix product failure rate.
    Famp,
    /// Kernel factor eigenvalue sandwich against the exact kernel.
    Sandwich,
    /// Entry bounds of the approximate kernel.
    Entries,
    /// 2×2 principal minors of the approximate kernel.
    PsdMinor,
    /// Per-stage bounds of the even-power chain.
    Induction,
    /// Forward error of the least-squares and PSD solvers.
    ForwardError,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    #[arg(value_enum)]
    pub suite: Suite,
    #[command(flatten)]
    pub shape: Shape,
    /// Accuracy under test (default 0.25 for sketches, 0.5 for kernels, 0.004
    /// for entry bounds, 1e-6 for solvers).
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long, default_value_t = 0.05)]
    pub delta: f64,
    #[arg(long, default_value_t = 100)]
    pub trials: usize,
    /// Power for the induction audit.
    #[arg(long, default_value_t = 4)]
    pub j: usize,
    /// Smallest passing fraction for per-trial suites (default 1 − δ, or 0.9 for kernels).
    #[arg(long)]
    pub min_pass_rate: Option<f64>,
    #[command(flatten)]
    pub constants: Constants,
}

#[derive(Serialize)]
struct Summary {
    suite: Suite,
    n: usize,
    d: usize,
    eps: f64,
    delta: f64,
    trials: usize,
    seed: u64,
    /// What the suite compares against its threshold.
    statistic: &'static str,
    value: f64,
    threshold: f64,
    passed: bool,
    detail: Value,
}

/// Outcome of one trial of a per-trial suite.
#[derive(Clone, Debug, Serialize)]
struct Trial {
    trial: usize,
    passed: bool,
    /// The premise of the checked statement held; trials where it did not are
    /// reported but not counted.
    applicable: bool,
    measure: f64,
}

impl Trial {
    fn row(&self) -> Map<String, Value> {
        row!(
            "trial" => self.trial,
            "applicable" => self.applicable,
            "passed" => self.passed,
            "measure" => self.measure,
        )
    }
}

pub fn run(args: &VerifyArgs, seed: u64) -> Result<Outcome> {
    if args.trials == 0 {
        return Err(Error::Parameter("--trials must be positive".into()));
    }
    match args.suite {
        Suite::Embedding | Suite::Famp => sketch_suite(args, seed),
        _ => trial_suite(args, seed),
    }
}

fn sketch_suite(args: &VerifyArgs, seed: u64) -> Result<Outcome> {
    let Shape { n, d, kappa } = args.shape;
    let eps = args.eps.unwrap_or(0.25);
    let c = &args.constants;
    let factory = |t: usize| {
        let s = derive_seed(seed, label::TRIAL, t as u64);
        match c.sketch_rows {
            Some(m) => SrhtSketch::new(n, m, s),
            None => SrhtSketch::for_subspace(n, d, eps, args.delta, c.embedding_constant, s),
        }
    };
    let a = gen_matrix(n, d, kappa, derive_seed(seed, label::INSTANCE, 0))?;
    let (statistic, value, detail, rows) = if args.suite == Suite::Embedding {
        let report = check_embedding(factory, &a, eps, args.trials)?;
        let rows = report
            .per_trial
            .iter()
            .enumerate()
            .map(|(t, r)| {
                row!(
                    "trial" => t,
                    "min_singular" => r.min_singular,
                    "max_singular" => r.max_singular,
                    "epsilon" => r.epsilon(),
                )
            })
            .collect();
        ("failure_rate", report.failure_rate, serde_json::to_value(&report), rows)
    } else {
        let b = gaussian(n, d, derive_seed(seed, label::INSTANCE, 1));
        let report = check_famp(factory, &a, &b, eps, args.trials)?;
        let rows = vec![row!(
            "trials" => report.trials,
            "failure_rate" => report.failure_rate,
            "max_relative_error" => report.max_relative_error,
        )];
        ("failure_rate", report.failure_rate, serde_json::to_value(&report), rows)
    };
    let passed = value <= args.delta;
    let summary = Summary {
        suite: args.suite,
        n,
        d,
        eps,
        delta: args.delta,
        trials: args.trials,
        seed,
        statistic,
        value,
        threshold: args.delta,
        passed,
        detail: detail.expect("reports serialize"),
    };
    Ok(Outcome::new(summary, rows, passed))
}

fn trial_suite(args: &VerifyArgs, seed: u64) -> Result<Outcome> {
    let Shape { n, d, .. } = args.shape;
    let kernel = matches!(args.suite, Suite::Sandwich | Suite::Entries | Suite::PsdMinor);
    let eps = args.eps.unwrap_or(match args.suite {
        Suite::Entries => 0.004,
        _ if kernel => 0.5,
        _ => 1e-6,
    });
    let min_rate = match (args.min_pass_rate, args.suite) {
        (Some(r), _) => r,
        (None, Suite::PsdMinor | Suite::ForwardError) => 1.0,
        (None, _) if kernel => 0.9,
        (None, _) => 1.0 - args.delta,
    };
    let trials: Vec<Trial> = (0..args.trials)
        .into_par_iter()
        .map(|t| {
            let s = derive_seed(seed, label::TRIAL, t as u64);
            let (applicable, passed, measure) = match args.suite {
                Suite::Sandwich => sandwich_trial(args, eps, s)?,
                Suite::Entries => entries_trial(args, eps, s)?,
                Suite::PsdMinor => minor_trial(args, eps, s)?,
                Suite::Induction => induction_trial(args, eps, s)?,
                Suite::ForwardError => forward_trial(args, eps, s)?,
                Suite::Embedding | Suite::Famp => unreachable!("sketch suites are handled separately"),
            };
            Ok(Trial {
                trial: t,
                passed,
                applicable,
                measure,
            })
        })
        .collect::<Result<_>>()?;
    let counted: Vec<&Trial> = trials.iter().filter(|t| t.applicable).collect();
    let rate = if counted.is_empty() {
        1.0
    } else {
        counted.iter().filter(|t| t.passed).count() as f64 / counted.len() as f64
    };
    let passed = rate >= min_rate;
    let rows = trials.iter().map(Trial::row).collect();
    let summary = Summary {
        suite: args.suite,
        n,
        d,
        eps,
        delta: args.delta,
        trials: args.trials,
        seed,
        statistic: "pass_rate",
        value: rate,
        threshold: min_rate,
        passed,
        detail: serde_json::json!({ "applicable": counted.len(), "per_trial": trials }),
    };
    Ok(Outcome::new(summary, rows, passed))
}

fn kernel_data(args: &VerifyArgs, seed: u64) -> apkr::DenseMatrix {
    gen_capped_rows(args.shape.n, args.shape.d, 1.0, derive_seed(seed, label::INSTANCE, 0))
}

/// Measure: smallest eigenvalue margin of the sandwich.
fn sandwich_trial(args: &VerifyArgs, eps: f64, seed: u64) -> Result<(bool, bool, f64)> {
    let a = kernel_data(args, seed);
    let f = build_kernel_factor(&a, eps, args.delta, seed, &args.constants.kernel())?;
    let r = spectral_sandwich(&exact_attention_kernel(&a), &f.gram(), eps)?;
    Ok((true, r.passed, r.lower_min_eig.min(r.upper_min_eig)))
}

/// Applicable when `eps ≤ e^{−4r}/4`. Measure: number of entries outside the bounds.
fn entries_trial(args: &VerifyArgs, eps: f64, seed: u64) -> Result<(bool, bool, f64)> {
    let a = kernel_data(args, seed);
    let r2 = a.row_iter().map(|row| row.norm_squared()).fold(0.0, f64::max);
    let f = build_kernel_factor(&a, eps, args.delta, seed, &args.constants.kernel())?;
    let report = kernel_entry_bound_check(&f.gram(), r2, eps);
    Ok((report.condition_holds, report.passed, report.failures.len() as f64))
}

/// Measure: number of violated minors.
fn minor_trial(args: &VerifyArgs, eps: f64, seed: u64) -> Result<(bool, bool, f64)> {
    let a = kernel_data(args, seed);
    let f = build_kernel_factor(&a, eps, args.delta, seed, &args.constants.kernel())?;
    let report = psd_minor_check(&f.gram());
    Ok((true, report.passed, report.failures.len() as f64))
}

/// Audits every stage `k` of an even-power chain that reported convergence:
/// `‖(AᵀA)ᵏb_k − b‖ ≤ ε_k‖b‖` and `‖b_k‖ ≤ 2σ_min^{−2k}‖b‖`. Measure: the
/// largest ratio of a stage quantity to its bound.
fn induction_trial(args: &VerifyArgs, eps: f64, seed: u64) -> Result<(bool, bool, f64)> {
    let Shape { n, d, kappa } = args.shape;
    let a = gen_matrix(n, d, kappa, derive_seed(seed, label::INSTANCE, 0))?;
    let b = gaussian_vec(d, derive_seed(seed, label::RHS, 0));
    let opts = SolveOptions::seeded(seed).with_config(args.constants.solver());
    let (report, iterates) = even_power_chain(&a, &b, args.j, eps, args.delta, &opts)?;
    let sigma_min = spectrum(&a).sigma_min;
    let b_norm = norm(&b);
    let mut worst = 0.0_f64;
    for (idx, bk) in iterates.iter().enumerate() {
        let k = idx + 1;
        let eps_k = eps * 0.5f64.powi((args.j - k) as i32);
        let residual = norm(&sub(&apply_power(&a, bk, k, Parity::Even), &b));
        worst = worst.max(residual / (eps_k * b_norm));
        worst = worst.max(norm(bk) / (2.0 * sigma_min.powi(-2 * k as i32) * b_norm));
    }
    Ok((report.converged, worst <= 1.0, worst))
}

/// Standard: `‖x′ − x*‖ ≤ 2√ε·OPT/σ_min` when `‖Ax′ − b‖ ≤ (1+ε)·OPT`.
/// PSD: `‖x′ − x*‖ ≤ ε‖b‖/σ_min²` when `‖AᵀAx′ − b‖ ≤ ε‖b‖`.
/// Measure: the larger ratio of error to bound.
fn forward_trial(args: &VerifyArgs, eps: f64, seed: u64) -> Result<(bool, bool, f64)> {
    let Shape { n, d, kappa } = args.shape;
    let a = gen_matrix(n, d, kappa, derive_seed(seed, label::INSTANCE, 0))?;
    let sp = spectrum(&a);
    let opts = SolveOptions::seeded(seed).with_config(args.constants.solver());
    let mut applicable = true;
    let mut worst = 0.0_f64;

    let b = gaussian_vec(n, derive_seed(seed, label::RHS, 0));
    let oracle = svd_lstsq(&a, &b, None)?;
    let rep = fast_linear_regression(&a, &b, eps, args.delta, &opts)?;
    let cost = norm(&sub(&mat_vec(&a, &rep.solution), &b));
    if cost <= (1.0 + eps) * oracle.exact_cost {
        let err = norm(&sub(&rep.solution, &oracle.exact_solution));
        let bound = 2.0 * eps.sqrt() * oracle.exact_cost / sp.sigma_min;
        worst = worst.max(if bound > 0.0 { err / bound } else { err });
    } else {
        applicable = false;
    }

    let b2 = gaussian_vec(d, derive_seed(seed, label::RHS, 1));
    let gram = a.transpose() * &a;
    let exact = svd_lstsq(&gram, &b2, None)?.exact_solution;
    let rep = fast_psd_regression(&a, &b2, eps, args.delta, &opts)?;
    if rep.relative_residual <= eps {
        let err = norm(&sub(&rep.solution, &exact));
        worst = worst.max(err / (eps * norm(&b2) / sp.sigma_min.powi(2)));
    } else {
        applicable = false;
    }
    Ok((applicable, worst <= 1.0 + 1e-9, worst))
}
