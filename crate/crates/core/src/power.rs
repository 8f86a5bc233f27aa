//! Chained solvers for `(AᵀA)ʲ` and `A(AᵀA)ʲ` regression and the reduction of
//! the attention form `min ‖X·W·Xᵀ·X·v − y‖` to the three-matrix problem.
//!
//! Every chain is a sequence of least-squares and PSD solves whose tolerances
//! shrink with the condition number of `A`. That number is taken from
//! [`SolveOptions::kappa`] when set and estimated once per call otherwise.

use crate::error::check_unit_interval;
use crate::linalg::{is_symmetric, mat_vec, norm};
use crate::oracle::{apply_power, power_residual, Parity};
use crate::rng::{derive_seed, label};
use crate::solvers::{
    build_preconditioner_with, check_tall, estimate_condition, linear_stage_with, psd_stage_with, PrecisionBudget,
    Preconditioner, SolveOptions, SolveReport, StageRecord, StopReason,
};
use crate::{DenseMatrix, Error, Result};
use std::rc::Rc;
use std::time::Instant;

/// Seed of stage `k` of a chain started with `seed`. Stage 0 is the initial
/// least-squares solve of the odd-power and three-matrix chains.
pub fn stage_seed(seed: u64, k: usize) -> u64 {
    derive_seed(seed, label::STAGE, k as u64)
}

/// Preconditioners of the stages of one chain.
///
/// A sketch that saturates to the full transform is an isometry whatever its
/// signs, so the first such preconditioner is reused by every later stage and
/// its triangular factor gives the singular values of `A` exactly.
struct Stages<'a> {
    a: &'a DenseMatrix,
    opts: &'a SolveOptions,
    shared: Option<Rc<Preconditioner>>,
    pending: Option<(usize, Rc<Preconditioner>)>,
}

impl<'a> Stages<'a> {
    fn new(a: &'a DenseMatrix, opts: &'a SolveOptions) -> Self {
        Self {
            a,
            opts,
            shared: None,
            pending: None,
        }
    }

    /// Preconditioner of stage `k`, sized for failure probability `delta/2`.
    fn preconditioner(&mut self, k: usize, delta: f64) -> Result<Rc<Preconditioner>> {
        if let Some(p) = &self.shared {
            return Ok(Rc::clone(p));
        }
        if let Some((stage, p)) = self.pending.take() {
            if stage == k {
                return Ok(p);
            }
        }
        let p = Rc::new(build_preconditioner_with(
            self.a,
            delta / 2.0,
            stage_seed(self.opts.seed, k),
            &self.opts.config,
        )?);
        if p.sketch().is_full() {
            self.shared = Some(Rc::clone(&p));
        }
        Ok(p)
    }

    /// `opts.kappa` when given. Otherwise the inflated condition number, read
    /// from the first stage's preconditioner when its sketch is full.
    fn kappa(&mut self, first: usize, delta: f64) -> Result<f64> {
        match self.opts.kappa {
            Some(k) if k >= 1.0 && k.is_finite() => Ok(k),
            Some(k) => Err(Error::Parameter(format!("kappa = {k} must be finite and >= 1"))),
            None => {
                let p = self.preconditioner(first, delta)?;
                if !p.sketch().is_full() {
                    self.pending = Some((first, p));
                    return estimate_condition(self.a, &self.opts.config, self.opts.seed);
                }
                let (lo, hi) = p.estimated_singular_range();
                if !(lo > 0.0) || hi / lo > 1e15 {
                    return Err(Error::Rank(format!("condition number estimate {hi:e}/{lo:e} is not finite")));
                }
                Ok(self.opts.config.kappa_inflation * hi / lo)
            }
        }
    }

    fn linear(&mut self, k: usize, b: &[f64], eps: f64, delta: f64, kappa: f64) -> Result<(StageRecord, Vec<f64>)> {
        let p = self.preconditioner(k, delta)?;
        let (rec, x, _) = linear_stage_with(self.a, b, eps, delta, &stage_options(self.opts, k, kappa), &p)?;
        Ok((rec, x))
    }

    fn psd(&mut self, k: usize, b: &[f64], tol: f64, delta: f64, kappa: f64) -> Result<(StageRecord, Vec<f64>)> {
        let p = self.preconditioner(k, delta)?;
        let (rec, x, _) = psd_stage_with(self.a, b, tol, delta, &stage_options(self.opts, k, kappa), &p)?;
        Ok((rec, x))
    }
}

fn stage_options(opts: &SolveOptions, k: usize, kappa: f64) -> SolveOptions {
    SolveOptions {
        seed: stage_seed(opts.seed, k),
        config: opts.config.clone(),
        kappa: Some(kappa),
    }
}

fn check_rhs(len: usize, expected: usize, what: &str) -> Result<()> {
    if len != expected {
        return Err(Error::Dimension(format!("{what} has length {len}, expected {expected}")));
    }
    Ok(())
}

/// Smallest stage tolerance worth requesting: the configured floor, or the
/// precision `4·u·κ²` at which a PSD residual stops being measurable.
fn tolerance_floor(opts: &SolveOptions, kappa: f64) -> f64 {
    opts.config.tolerance_floor.max(4.0 * f64::EPSILON * kappa * kappa)
}

/// Clamps a stage tolerance to the floor, noting when it bites.
fn floored(tol: f64, floor: f64, stage: &str, warnings: &mut Vec<String>) -> f64 {
    if tol < floor {
        warnings.push(format!("{stage}: tolerance {tol:e} raised to floor {floor:e}"));
        floor
    } else {
        tol
    }
}

fn note_stop(record: &StageRecord, warnings: &mut Vec<String>) {
    match record.stop {
        StopReason::Stalled => warnings.push(format!(
            "{}: stalled at relative residual {:e} above tolerance {:e}",
            record.name, record.relative_residual, record.tolerance
        )),
        StopReason::MaxIterations => warnings.push(format!(
            "{}: iteration cap {} reached at relative residual {:e}",
            record.name, record.max_iterations, record.relative_residual
        )),
        _ => {}
    }
}

/// `min ‖A·Aᵀ·A·x − b‖` for `b ∈ Rⁿ`: least squares for `Aᵀ·A·x ≈ A⁺b`, then a
/// PSD solve at `eps3/κ`.
pub fn three_matrices(a: &DenseMatrix, b: &[f64], eps3: f64, delta3: f64, opts: &SolveOptions) -> Result<SolveReport> {
    let started = Instant::now();
    check_tall(a)?;
    check_unit_interval("eps3", eps3, 0.1)?;
    check_unit_interval("delta3", delta3, 0.1)?;
    check_rhs(b.len(), a.nrows(), "b")?;
    let mut stages = Stages::new(a, opts);
    let kappa = stages.kappa(0, delta3 / 2.0)?;
    let mut warnings = Vec::new();

    let (mut first, b2) = stages.linear(0, b, 0.1 * eps3, delta3 / 2.0, kappa)?;
    first.name = "three: least squares".into();
    note_stop(&first, &mut warnings);
    let tol = floored(eps3 / kappa, tolerance_floor(opts, kappa), "three: psd", &mut warnings);
    let (mut second, x) = stages.psd(1, &b2, tol, delta3 / 2.0, kappa)?;
    second.name = "three: psd".into();
    second.eps = eps3;
    note_stop(&second, &mut warnings);

    let residual = power_residual(a, &x, b, 1, Parity::Odd);
    Ok(SolveReport::from_stages(x, residual, norm(b), vec![first, second], warnings, started))
}

/// `min ‖AᵀA·AᵀA·x − b4‖` by two PSD solves at `0.1·eps4/κ²` each.
pub fn four_matrices(a: &DenseMatrix, b4: &[f64], eps4: f64, delta4: f64, opts: &SolveOptions) -> Result<SolveReport> {
    let started = Instant::now();
    check_tall(a)?;
    check_unit_interval("eps4", eps4, 0.1)?;
    check_unit_interval("delta4", delta4, 0.1)?;
    check_rhs(b4.len(), a.ncols(), "b")?;
    let mut stages = Stages::new(a, opts);
    let kappa = stages.kappa(1, delta4 / 2.0)?;
    let mut warnings = Vec::new();
    let tol = floored(0.1 * eps4 / (kappa * kappa), tolerance_floor(opts, kappa), "four", &mut warnings);

    let mut log = Vec::with_capacity(2);
    let mut rhs = b4.to_vec();
    for k in 1..=2 {
        let (mut rec, x) = stages.psd(k, &rhs, tol, delta4 / 2.0, kappa)?;
        rec.name = format!("four: psd {k}");
        note_stop(&rec, &mut warnings);
        log.push(rec);
        rhs = x;
    }
    let residual = power_residual(a, &rhs, b4, 2, Parity::Even);
    Ok(SolveReport::from_stages(rhs, residual, norm(b4), log, warnings, started))
}

/// `min ‖(AᵀA)ʲx − b‖` for `b ∈ Rᵈ`.
///
/// Stage `k = 1..=j` solves `AᵀA·b_k = b_{k−1}` to relative accuracy
/// `ε_k/κ^{2k}` with `ε_k = eps_final·0.5^{j−k}`, `δ_k = delta_final/k`,
/// and stage seed [`stage_seed`]`(seed, k)`. The output is `b_j`.
pub fn even_powers(
    a: &DenseMatrix,
    b: &[f64],
    j: usize,
    eps_final: f64,
    delta_final: f64,
    opts: &SolveOptions,
) -> Result<SolveReport> {
    even_power_chain(a, b, j, eps_final, delta_final, opts).map(|(report, _)| report)
}

/// [`even_powers`] also returning every intermediate `b_k`, `k = 1..=j`.
pub fn even_power_chain(
    a: &DenseMatrix,
    b: &[f64],
    j: usize,
    eps_final: f64,
    delta_final: f64,
    opts: &SolveOptions,
) -> Result<(SolveReport, Vec<Vec<f64>>)> {
    let started = Instant::now();
    check_tall(a)?;
    let budget = PrecisionBudget::new(eps_final, delta_final)?;
    check_power(j, opts)?;
    check_rhs(b.len(), a.ncols(), "b")?;
    let mut stages = Stages::new(a, opts);
    let kappa = stages.kappa(1, budget.delta_final)?;
    let mut warnings = Vec::new();
    let (log, iterates) = run_even_chain(&mut stages, b, j, &budget, kappa, "even", &mut warnings)?;
    let x = iterates.last().cloned().unwrap_or_default();
    let residual = power_residual(a, &x, b, j, Parity::Even);
    Ok((
        SolveReport::from_stages(x, residual, norm(b), log, warnings, started),
        iterates,
    ))
}

fn check_power(j: usize, opts: &SolveOptions) -> Result<()> {
    if j == 0 || j > opts.config.max_power {
        return Err(Error::Parameter(format!(
            "power j = {j} outside 1..={}",
            opts.config.max_power
        )));
    }
    Ok(())
}

fn run_even_chain(
    stages: &mut Stages,
    b: &[f64],
    j: usize,
    budget: &PrecisionBudget,
    kappa: f64,
    name: &str,
    warnings: &mut Vec<String>,
) -> Result<(Vec<StageRecord>, Vec<Vec<f64>>)> {
    let mut log = Vec::with_capacity(j);
    let mut iterates = Vec::with_capacity(j);
    let mut rhs = b.to_vec();
    for stage in budget.even_schedule(j) {
        let stage_name = format!("{name}: stage {}", stage.k);
        let raw = stage.eps / kappa.powi(2 * stage.k as i32);
        let tol = floored(raw, tolerance_floor(stages.opts, kappa), &stage_name, warnings);
        let (mut rec, x) = stages.psd(stage.k, &rhs, tol, stage.delta, kappa)?;
        rec.name = stage_name;
        rec.eps = stage.eps;
        note_stop(&rec, warnings);
        log.push(rec);
        iterates.push(x.clone());
        rhs = x;
    }
    Ok((log, iterates))
}

/// `min ‖A(AᵀA)ʲx − b‖` for `b ∈ Rⁿ`: least squares at `0.1·eps_final`
/// (stage 0), then [`even_powers`] at `eps_final/κ` on the result.
pub fn odd_powers(
    a: &DenseMatrix,
    b: &[f64],
    j: usize,
    eps_final: f64,
    delta_final: f64,
    opts: &SolveOptions,
) -> Result<SolveReport> {
    let started = Instant::now();
    check_tall(a)?;
    check_unit_interval("eps_final", eps_final, 0.1)?;
    check_unit_interval("delta_final", delta_final, 0.1)?;
    check_power(j, opts)?;
    check_rhs(b.len(), a.nrows(), "b")?;
    let mut stages = Stages::new(a, opts);
    let kappa = stages.kappa(0, delta_final / 2.0)?;
    let mut warnings = Vec::new();

    let (mut first, b1) = stages.linear(0, b, 0.1 * eps_final, delta_final / 2.0, kappa)?;
    first.name = "odd: least squares".into();
    note_stop(&first, &mut warnings);
    let budget = PrecisionBudget::new(eps_final / kappa, delta_final / 2.0)?;
    let (rest, iterates) = run_even_chain(&mut stages, &b1, j, &budget, kappa, "odd", &mut warnings)?;
    let x = iterates.last().cloned().unwrap_or_default();
    let residual = power_residual(a, &x, b, j, Parity::Odd);
    let mut log = vec![first];
    log.extend(rest);
    Ok(SolveReport::from_stages(x, residual, norm(b), log, warnings, started))
}

/// `X̃ = X·U` for the Cholesky factor `W = U·Uᵀ`, turning
/// `min ‖X·W·Xᵀ·X·v − y‖` into `min ‖X̃·X̃ᵀ·X̃·ṽ − y‖` with `v = U·ṽ`.
#[derive(Clone, Debug)]
pub struct AttentionReduction {
    pub x_tilde: DenseMatrix,
    /// Lower-triangular `U`.
    pub u: DenseMatrix,
}

impl AttentionReduction {
    /// `v = U·ṽ`.
    pub fn recover(&self, v_tilde: &[f64]) -> Vec<f64> {
        mat_vec(&self.u, v_tilde)
    }
}

pub fn reduce_attention_to_odd(x: &DenseMatrix, w: &DenseMatrix) -> Result<AttentionReduction> {
    let d = x.ncols();
    if w.shape() != (d, d) {
        return Err(Error::Dimension(format!(
            "W is {}x{}, expected {d}x{d}",
            w.nrows(),
            w.ncols()
        )));
    }
    if !is_symmetric(w, 1e-10) {
        return Err(Error::Definiteness("W is not symmetric".into()));
    }
    let u = nalgebra::Cholesky::new(w.clone())
        .ok_or_else(|| Error::Definiteness("W is not positive definite".into()))?
        .l();
    Ok(AttentionReduction {
        x_tilde: x * &u,
        u,
    })
}

/// `‖X·W·Xᵀ·X·v − y‖`, evaluated right to left.
pub fn attention_residual(x: &DenseMatrix, w: &DenseMatrix, v: &[f64], y: &[f64]) -> f64 {
    let xv = mat_vec(x, v);
    let xtxv = crate::linalg::mat_t_vec(x, &xv);
    let wv = mat_vec(w, &xtxv);
    norm(&crate::linalg::sub(&mat_vec(x, &wv), y))
}

/// Solves `min ‖X·W·Xᵀ·X·v − y‖` through the reduction and [`three_matrices`].
pub fn attention_regression(
    x: &DenseMatrix,
    w: &DenseMatrix,
    y: &[f64],
    eps: f64,
    delta: f64,
    opts: &SolveOptions,
) -> Result<SolveReport> {
    let reduction = reduce_attention_to_odd(x, w)?;
    let mut report = three_matrices(&reduction.x_tilde, y, eps, delta, opts)?;
    report.solution = reduction.recover(&report.solution);
    Ok(report)
}

/// `(AᵀA)ʲx` evaluated by repeated products.
pub fn apply_even_power(a: &DenseMatrix, x: &[f64], j: usize) -> Vec<f64> {
    apply_power(a, x, j, Parity::Even)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{dense_power_matrix, gaussian, gaussian_vec, gen_matrix, spectrum, svd_lstsq};
    use crate::solvers::fast_psd_regression;

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn full_sketch_is_shared_and_gives_exact_kappa() {
        let a = gen_matrix(256, 6, 40.0, 2).unwrap();
        let opts = SolveOptions::seeded(1);
        let mut stages = Stages::new(&a, &opts);
        let kappa = stages.kappa(1, 0.05).unwrap();
        assert!((kappa - 60.0).abs() < 1e-8);
        let first = stages.preconditioner(1, 0.05).unwrap();
        let later = stages.preconditioner(3, 0.01).unwrap();
        assert!(Rc::ptr_eq(&first, &later));
    }

    #[test]
    fn sampled_sketches_are_drawn_per_stage() {
        let a = gen_matrix(512, 4, 10.0, 3).unwrap();
        let cfg = crate::solvers::SolverConfig {
            sketch_rows: Some(64),
            ..Default::default()
        };
        let opts = SolveOptions::seeded(1).with_config(cfg);
        let mut stages = Stages::new(&a, &opts);
        stages.kappa(1, 0.05).unwrap();
        let first = stages.preconditioner(1, 0.05).unwrap();
        let second = stages.preconditioner(2, 0.05).unwrap();
        assert_eq!(first.seed(), stage_seed(1, 1));
        assert_eq!(second.seed(), stage_seed(1, 2));
    }

    #[test]
    fn three_trivial_cases() {
        let o = SolveOptions::seeded(1);
        let r = three_matrices(&DenseMatrix::identity(2, 2), &[5.0, -2.0], 1e-6, 0.01, &o).unwrap();
        assert!(close(&r.solution, &[5.0, -2.0], 1e-8) && r.residual < 1e-8);
        let a = DenseMatrix::identity(2, 2) * 2.0;
        let r = three_matrices(&a, &[8.0, 16.0], 1e-6, 0.01, &o).unwrap();
        assert!(close(&r.solution, &[1.0, 2.0], 1e-6));
    }

    #[test]
    fn three_random_bound() {
        let a = gen_matrix(256, 8, 20.0, 4).unwrap();
        let b = gaussian_vec(256, 5);
        let eps = 1e-4;
        let r = three_matrices(&a, &b, eps, 0.01, &SolveOptions::seeded(6)).unwrap();
        let m = dense_power_matrix(&a, 1, Parity::Odd).unwrap();
        let opt = svd_lstsq(&m, &b, None).unwrap().exact_cost;
        assert!(r.residual <= (1.0 + eps) * opt + eps * norm(&b));
        assert_eq!(r.stage_log.len(), 2);
    }

    #[test]
    fn four_cases() {
        let o = SolveOptions::seeded(2);
        let b = [1.0, 2.0, 3.0];
        let r = four_matrices(&DenseMatrix::identity(3, 3), &b, 1e-6, 0.01, &o).unwrap();
        assert!(close(&r.solution, &b, 1e-8));
        let a = DenseMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 2.0]);
        let r = four_matrices(&a, &[1.0, 16.0], 1e-6, 0.01, &o).unwrap();
        assert!(close(&r.solution, &[1.0, 1.0], 1e-6));
        let a = gen_matrix(256, 8, 10.0, 3).unwrap();
        let b = gaussian_vec(8, 1);
        let r = four_matrices(&a, &b, 1e-5, 0.01, &o).unwrap();
        let m = dense_power_matrix(&a, 2, Parity::Even).unwrap();
        let oracle = crate::linalg::mat_vec(&m, &r.solution);
        assert!(norm(&crate::linalg::sub(&oracle, &b)) <= 1e-5 * norm(&b));
    }

    #[test]
    fn even_identity_any_power() {
        let b = [1.0, -1.0, 2.0, 0.5, 3.0];
        for j in 1..=6 {
            let r = even_powers(&DenseMatrix::identity(5, 5), &b, j, 1e-6, 0.01, &SolveOptions::seeded(j as u64)).unwrap();
            assert!(close(&r.solution, &b, 1e-8), "j = {j}");
            assert_eq!(r.stage_log.len(), j);
        }
    }

    #[test]
    fn even_single_stage_matches_psd() {
        let a = gen_matrix(128, 6, 8.0, 1).unwrap();
        let b = gaussian_vec(6, 2);
        let kappa = 12.0;
        let opts = SolveOptions::seeded(77).with_kappa(kappa);
        let even = even_powers(&a, &b, 1, 1e-6, 0.02, &opts).unwrap();
        let psd_opts = SolveOptions::seeded(stage_seed(77, 1)).with_kappa(kappa);
        let psd = fast_psd_regression(&a, &b, 1e-6 / (kappa * kappa), 0.02, &psd_opts).unwrap();
        assert!(close(&even.solution, &psd.solution, 1e-9));
    }

    #[test]
    fn even_chain_stage_laws() {
        let a = gen_matrix(256, 8, 5.0, 9).unwrap();
        let b = gaussian_vec(8, 3);
        let (r, iterates) = even_power_chain(&a, &b, 3, 1e-6, 0.05, &SolveOptions::seeded(4)).unwrap();
        let sigma = spectrum(&a).sigma_min;
        for (k, (rec, bk)) in r.stage_log.iter().zip(&iterates).enumerate() {
            let k = k + 1;
            assert_eq!(rec.eps, 1e-6 * 0.5f64.powi(3 - k as i32));
            assert_eq!(rec.delta, 0.05 / k as f64);
            let res = power_residual(&a, bk, &b, k, Parity::Even);
            assert!(res <= rec.eps * norm(&b), "stage {k}: {res:e}");
            assert!(norm(bk) <= 2.0 * sigma.powi(-2 * k as i32) * norm(&b));
        }
        assert!(r.residual <= 1e-6 * norm(&b));
    }

    #[test]
    fn odd_cases() {
        let b = [1.0, 2.0, -3.0];
        for j in 1..=4 {
            let r = odd_powers(&DenseMatrix::identity(3, 3), &b, j, 1e-6, 0.01, &SolveOptions::seeded(0)).unwrap();
            assert!(close(&r.solution, &b, 1e-8));
        }
        let a = gen_matrix(256, 6, 6.0, 2).unwrap();
        let x = gaussian_vec(6, 1);
        let b = apply_power(&a, &x, 2, Parity::Odd);
        let r = odd_powers(&a, &b, 2, 1e-6, 0.01, &SolveOptions::seeded(3)).unwrap();
        assert!(r.residual <= 2e-6 * norm(&b), "{:e}", r.relative_residual);
        assert_eq!(r.stage_log.len(), 3);
    }

    #[test]
    fn odd_and_three_agree_for_j1() {
        let a = gen_matrix(128, 4, 4.0, 8).unwrap();
        let b = gaussian_vec(128, 9);
        let eps = 1e-4;
        let o = SolveOptions::seeded(3);
        let odd = odd_powers(&a, &b, 1, eps, 0.01, &o).unwrap();
        let three = three_matrices(&a, &b, eps, 0.01, &o).unwrap();
        let m = dense_power_matrix(&a, 1, Parity::Odd).unwrap();
        let opt = svd_lstsq(&m, &b, None).unwrap().exact_cost;
        for r in [&odd, &three] {
            assert!(r.residual <= (1.0 + eps) * opt + eps * norm(&b));
        }
    }

    #[test]
    fn power_argument_errors() {
        let a = DenseMatrix::identity(3, 3);
        let o = SolveOptions::default();
        assert!(matches!(even_powers(&a, &[1.0; 3], 0, 1e-3, 0.01, &o), Err(Error::Parameter(_))));
        assert!(matches!(even_powers(&a, &[1.0; 3], 17, 1e-3, 0.01, &o), Err(Error::Parameter(_))));
        assert!(matches!(odd_powers(&a, &[1.0; 2], 1, 1e-3, 0.01, &o), Err(Error::Dimension(_))));
        assert!(matches!(three_matrices(&a, &[1.0; 3], 0.5, 0.01, &o), Err(Error::Parameter(_))));
    }

    #[test]
    fn tolerance_floor_warns() {
        let a = gen_matrix(64, 4, 30.0, 1).unwrap();
        let r = even_powers(&a, &gaussian_vec(4, 2), 6, 1e-6, 0.01, &SolveOptions::seeded(1)).unwrap();
        assert!(r.warnings.iter().any(|w| w.contains("floor")));
    }

    #[test]
    fn reduction_cases() {
        let x = gaussian(10, 3, 1);
        let r = reduce_attention_to_odd(&x, &DenseMatrix::identity(3, 3)).unwrap();
        assert!((&r.x_tilde - &x).amax() < 1e-15);
        let w = DenseMatrix::identity(3, 3) * 4.0;
        let r = reduce_attention_to_odd(&x, &w).unwrap();
        assert!((&r.x_tilde - &x * 2.0).amax() < 1e-14);
        let vt = [1.0, -1.0, 0.5];
        assert_eq!(r.recover(&vt), vec![2.0, -2.0, 1.0]);
        let y = gaussian_vec(10, 2);
        let lhs = attention_residual(&x, &w, &r.recover(&vt), &y);
        let rhs = power_residual(&r.x_tilde, &vt, &y, 1, Parity::Odd);
        assert!((lhs - rhs).abs() <= 1e-9 * lhs.max(1.0));
        let neg = DenseMatrix::from_row_slice(3, 3, &[1.0, 0.0, 0.0, 0.0, -1.0, 0.0, 0.0, 0.0, 1.0]);
        assert!(matches!(reduce_attention_to_odd(&x, &neg), Err(Error::Definiteness(_))));
        let asym = DenseMatrix::from_row_slice(3, 3, &[1.0, 0.1, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0]);
        assert!(matches!(reduce_attention_to_odd(&x, &asym), Err(Error::Definiteness(_))));
    }

    #[test]
    fn attention_regression_solves_planted_problem() {
        let x = gen_matrix(64, 4, 3.0, 5).unwrap();
        let g = gaussian(4, 4, 6);
        let w = &g * g.transpose() + DenseMatrix::identity(4, 4);
        let v = gaussian_vec(4, 7);
        let xtxv = crate::linalg::mat_t_vec(&x, &mat_vec(&x, &v));
        let y = mat_vec(&x, &mat_vec(&w, &xtxv));
        let r = attention_regression(&x, &w, &y, 1e-6, 0.01, &SolveOptions::seeded(8)).unwrap();
        assert!(attention_residual(&x, &w, &r.solution, &y) <= 2e-6 * norm(&y));
        assert!((attention_residual(&x, &w, &r.solution, &y) - r.residual).abs() <= 1e-9 * norm(&y));
    }
}
