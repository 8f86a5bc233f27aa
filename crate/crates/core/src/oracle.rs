//! Dense exact reference computations.
//!
//! Everything here is `O(n·d²)` or worse and exists to check the randomized
//! solvers: SVD least squares, explicit matrix powers, exact kernels and
//! condition numbers, plus seeded test-instance generators.

use crate::linalg::{self, norm, RANK_TOL};
use crate::rng::{self, label, STREAM_DATA};
use crate::{DenseMatrix, Error, Result};
use nalgebra::{DVector, SVD};
use rand_distr::{Distribution, StandardNormal, Uniform};
use serde::Serialize;

/// Largest `n` for which dense `n × n` kernels are formed.
pub const MAX_DENSE_KERNEL: usize = 2048;

#[derive(Clone, Copy, Debug, Serialize)]
pub struct SpectrumInfo {
    pub sigma_min: f64,
    pub sigma_max: f64,
    /// `σ_max/σ_min`, or `+∞` when the matrix is numerically rank deficient.
    pub kappa: f64,
    pub rank_tol: f64,
}

pub fn spectrum(a: &DenseMatrix) -> SpectrumInfo {
    let sv = linalg::singular_values(a);
    let sigma_max = sv.first().copied().unwrap_or(0.0);
    let full = sv.len() == a.ncols().min(a.nrows()) && a.nrows() >= a.ncols();
    let sigma_min = if full { sv.last().copied().unwrap_or(0.0) } else { 0.0 };
    let rank_tol = RANK_TOL * sigma_max;
    let kappa = if sigma_max > 0.0 && sigma_min > rank_tol {
        sigma_max / sigma_min
    } else {
        f64::INFINITY
    };
    SpectrumInfo {
        sigma_min,
        sigma_max,
        kappa,
        rank_tol,
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct OracleReport {
    pub exact_solution: Vec<f64>,
    /// `OPT = min ‖Mx − b‖₂`.
    pub exact_cost: f64,
    pub residual_of_candidate: Option<f64>,
    /// `residual/OPT − 1`, or `residual/‖b‖` when `OPT = 0`.
    pub relative_gap: Option<f64>,
}

/// Minimum-norm least squares through a full SVD, singular values below
/// `1e-12·σ_max` treated as zero.
pub fn svd_lstsq(m: &DenseMatrix, b: &[f64], candidate: Option<&[f64]>) -> Result<OracleReport> {
    if b.len() != m.nrows() {
        return Err(Error::Dimension(format!(
            "matrix has {} rows, right-hand side has {}",
            m.nrows(),
            b.len()
        )));
    }
    let rhs = DVector::from_column_slice(b);
    let svd = SVD::new(m.clone(), true, true);
    let sigma_max = svd.singular_values.iter().fold(0.0_f64, |a, &s| a.max(s));
    let x = if sigma_max == 0.0 {
        DVector::zeros(m.ncols())
    } else {
        svd.solve(&rhs, RANK_TOL * sigma_max)
            .map_err(|e| Error::Rank(e.to_string()))?
    };
    let exact_cost = (m * &x - &rhs).norm();
    let (residual_of_candidate, relative_gap) = match candidate {
        Some(c) => {
            if c.len() != m.ncols() {
                return Err(Error::Dimension("candidate length mismatch".into()));
            }
            let r = (m * DVector::from_column_slice(c) - &rhs).norm();
            let gap = if exact_cost > 0.0 {
                r / exact_cost - 1.0
            } else {
                r / norm(b).max(f64::MIN_POSITIVE)
            };
            (Some(r), Some(gap))
        }
        None => (None, None),
    };
    Ok(OracleReport {
        exact_solution: x.iter().copied().collect(),
        exact_cost,
        residual_of_candidate,
        relative_gap,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    /// `(AᵀA)ʲ`
    Even,
    /// `A(AᵀA)ʲ`
    Odd,
}

/// `(AᵀA)ʲ` or `A(AᵀA)ʲ` by repeated squaring of the Gram matrix.
pub fn dense_power_matrix(a: &DenseMatrix, j: usize, parity: Parity) -> Result<DenseMatrix> {
    if j == 0 {
        return Err(Error::Parameter("power j must be at least 1".into()));
    }
    let kappa = spectrum(a).kappa;
    if j as f64 * kappa.log2() > 45.0 {
        return Err(Error::Parameter(format!(
            "j·log2(κ) = {:.1} exceeds the double-precision bound 45",
            j as f64 * kappa.log2()
        )));
    }
    let gram = a.transpose() * a;
    let mut result: Option<DenseMatrix> = None;
    let mut base = gram;
    let mut e = j;
    loop {
        if e & 1 == 1 {
            result = Some(match result {
                None => base.clone(),
                Some(r) => r * &base,
            });
        }
        e >>= 1;
        if e == 0 {
            break;
        }
        base = &base * &base;
    }
    let power = result.expect("j >= 1");
    let out = match parity {
        Parity::Even => power,
        Parity::Odd => a * power,
    };
    if out.iter().any(|v| !v.is_finite() || v.abs() > 1e300) {
        return Err(Error::Overflow("matrix power entry exceeds 1e300".into()));
    }
    Ok(out)
}

/// `(AᵀA)ʲx` or `A(AᵀA)ʲx` by repeated matrix–vector products.
pub fn apply_power(a: &DenseMatrix, x: &[f64], j: usize, parity: Parity) -> Vec<f64> {
    let mut v = x.to_vec();
    for _ in 0..j {
        v = linalg::mat_t_vec(a, &linalg::mat_vec(a, &v));
    }
    match parity {
        Parity::Even => v,
        Parity::Odd => linalg::mat_vec(a, &v),
    }
}

/// `‖(AᵀA)ʲx − b‖₂` or `‖A(AᵀA)ʲx − b‖₂`.
pub fn power_residual(a: &DenseMatrix, x: &[f64], b: &[f64], j: usize, parity: Parity) -> f64 {
    norm(&linalg::sub(&apply_power(a, x, j, parity), b))
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct SandwichReport {
    /// Smallest eigenvalue of `K̃ − (1−ε)K`.
    pub lower_min_eig: f64,
    /// Smallest eigenvalue of `(1+ε)K − K̃`.
    pub upper_min_eig: f64,
    pub passed: bool,
}

/// Checks `(1−ε)K ⪯ K̃ ⪯ (1+ε)K` up to an eigenvalue slack of `1e-8`.
pub fn spectral_sandwich(exact: &DenseMatrix, approx: &DenseMatrix, eps: f64) -> Result<SandwichReport> {
    if exact.shape() != approx.shape() || exact.nrows() != exact.ncols() {
        return Err(Error::Dimension("sandwich needs two square matrices of equal size".into()));
    }
    let lower = approx - exact * (1.0 - eps);
    let upper = exact * (1.0 + eps) - approx;
    let sym = |m: DenseMatrix| (&m + m.transpose()) * 0.5;
    let lower_min_eig = linalg::symmetric_eigenvalues(&sym(lower))[0];
    let upper_min_eig = linalg::symmetric_eigenvalues(&sym(upper))[0];
    Ok(SandwichReport {
        lower_min_eig,
        upper_min_eig,
        passed: lower_min_eig >= -1e-8 && upper_min_eig >= -1e-8,
    })
}

/// `exp(AAᵀ)` entrywise, refused for more than [`MAX_DENSE_KERNEL`] rows.
pub fn exact_kernel(a: &DenseMatrix) -> Result<DenseMatrix> {
    if a.nrows() > MAX_DENSE_KERNEL {
        return Err(Error::Size(format!(
            "exact kernel with n = {} > {MAX_DENSE_KERNEL}",
            a.nrows()
        )));
    }
    Ok(crate::kernel::exact_attention_kernel(a))
}

/// Degree-`q` Taylor truncation `Σ_{l≤q} (AAᵀ)^{∘l}/l!` of the attention kernel.
pub fn truncated_kernel(a: &DenseMatrix, q: usize) -> Result<DenseMatrix> {
    if a.nrows() > MAX_DENSE_KERNEL {
        return Err(Error::Size(format!("truncated kernel with n = {}", a.nrows())));
    }
    let gram = a * a.transpose();
    Ok(gram.map(|g| {
        let mut term = 1.0;
        let mut sum = 1.0;
        for l in 1..=q {
            term *= g / l as f64;
            sum += term;
        }
        sum
    }))
}

/// `U·Σ·Vᵀ` with seeded random orthonormal `U` (n×d), `V` (d×d) and singular
/// values spaced geometrically from 1 to `kappa_target`.
pub fn gen_matrix(n: usize, d: usize, kappa_target: f64, seed: u64) -> Result<DenseMatrix> {
    if d == 0 || n < d {
        return Err(Error::Parameter(format!("need n >= d >= 1, got n = {n}, d = {d}")));
    }
    if !(kappa_target >= 1.0) || !kappa_target.is_finite() {
        return Err(Error::Parameter(format!("kappa_target = {kappa_target} must be >= 1")));
    }
    if d == 1 && kappa_target != 1.0 {
        return Err(Error::Parameter("a single column has condition number 1".into()));
    }
    let u = linalg::orthonormal_basis(&gaussian(n, d, rng::derive_seed(seed, label::INSTANCE, 0)))?;
    let v = linalg::orthonormal_basis(&gaussian(d, d, rng::derive_seed(seed, label::INSTANCE, 1)))?;
    let sigma = DVector::from_fn(d, |i, _| {
        if d == 1 {
            1.0
        } else {
            kappa_target.powf(i as f64 / (d - 1) as f64)
        }
    });
    Ok(u * DenseMatrix::from_diagonal(&sigma) * v.transpose())
}

/// Seeded standard normal matrix.
pub fn gaussian(rows: usize, cols: usize, seed: u64) -> DenseMatrix {
    let mut rng = rng::stream(seed, STREAM_DATA);
    DenseMatrix::from_fn(rows, cols, |_, _| StandardNormal.sample(&mut rng))
}

/// Seeded standard normal vector.
pub fn gaussian_vec(len: usize, seed: u64) -> Vec<f64> {
    gaussian(len, 1, seed).iter().copied().collect()
}

/// Rows with uniformly random directions and norms uniform in `[0, radius]`.
pub fn gen_capped_rows(n: usize, d: usize, radius: f64, seed: u64) -> DenseMatrix {
    let mut a = gaussian(n, d, seed);
    let mut rng = rng::stream(rng::derive_seed(seed, label::INSTANCE, 2), STREAM_DATA);
    let uniform = Uniform::new_inclusive(0.0, radius).expect("valid radius");
    for mut row in a.row_iter_mut() {
        let len = row.norm();
        let target = uniform.sample(&mut rng);
        if len > 0.0 {
            row *= target / len;
        }
    }
    a
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lstsq_identity() {
        let r = svd_lstsq(&DenseMatrix::identity(3, 3), &[1.0, -2.0, 0.5], None).unwrap();
        assert_eq!(r.exact_solution.len(), 3);
        assert!((r.exact_solution[1] + 2.0).abs() < 1e-14);
        assert!(r.exact_cost < 1e-14);
    }

    #[test]
    fn lstsq_average() {
        let m = DenseMatrix::from_row_slice(2, 1, &[1.0, 1.0]);
        let r = svd_lstsq(&m, &[1.0, 3.0], Some(&[2.0])).unwrap();
        assert!((r.exact_solution[0] - 2.0).abs() < 1e-14);
        assert!((r.exact_cost - 2f64.sqrt()).abs() < 1e-14);
        assert!(r.relative_gap.unwrap().abs() < 1e-14);
    }

    #[test]
    fn lstsq_residual_orthogonal_to_range() {
        let m = gaussian(40, 6, 3);
        let b = gaussian_vec(40, 4);
        let r = svd_lstsq(&m, &b, None).unwrap();
        let res = linalg::sub(&linalg::mat_vec(&m, &r.exact_solution), &b);
        let proj = linalg::mat_t_vec(&m, &res);
        assert!(norm(&proj) < 1e-10 * norm(&b));
    }

    #[test]
    fn lstsq_rejects_bad_rhs() {
        assert!(matches!(svd_lstsq(&DenseMatrix::identity(2, 2), &[1.0], None), Err(Error::Dimension(_))));
    }

    #[test]
    fn power_of_identity_and_diagonal() {
        let p = dense_power_matrix(&DenseMatrix::identity(4, 4), 5, Parity::Even).unwrap();
        assert!((p - DenseMatrix::identity(4, 4)).amax() < 1e-15);
        let a = DenseMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 2.0]);
        let p = dense_power_matrix(&a, 2, Parity::Even).unwrap();
        assert_eq!(p, DenseMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 16.0]));
    }

    #[test]
    fn power_matches_naive_product() {
        let a = gaussian(16, 4, 11);
        let g = a.transpose() * &a;
        for parity in [Parity::Even, Parity::Odd] {
            let mut naive = g.clone();
            for _ in 1..3 {
                naive = &naive * &g;
            }
            if parity == Parity::Odd {
                naive = &a * naive;
            }
            let fast = dense_power_matrix(&a, 3, parity).unwrap();
            assert!((&fast - &naive).amax() <= 1e-12 * naive.amax());
        }
    }

    #[test]
    fn power_sanity_bound() {
        let a = gen_matrix(32, 4, 1e4, 1).unwrap();
        assert!(matches!(dense_power_matrix(&a, 4, Parity::Even), Err(Error::Parameter(_))));
        assert!(matches!(dense_power_matrix(&a, 0, Parity::Even), Err(Error::Parameter(_))));
    }

    #[test]
    fn spectrum_examples() {
        assert!((spectrum(&DenseMatrix::identity(3, 3)).kappa - 1.0).abs() < 1e-14);
        let d = DenseMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 10.0]);
        assert!((spectrum(&d).kappa - 10.0).abs() < 1e-12);
        let singular = DenseMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        assert!(spectrum(&singular).kappa.is_infinite());
    }

    #[test]
    fn planted_spectrum() {
        let a = gen_matrix(200, 100, 100.0, 5).unwrap();
        let s = spectrum(&a);
        assert!((s.kappa - 100.0).abs() < 1e-8);
        assert!((s.sigma_min - 1.0).abs() < 1e-10);
    }

    #[test]
    fn gen_matrix_properties() {
        let a = gen_matrix(64, 8, 1.0, 2).unwrap();
        assert!((spectrum(&a).kappa - 1.0).abs() < 1e-8);
        let b = gen_matrix(64, 8, 100.0, 9).unwrap();
        assert!((spectrum(&b).kappa - 100.0).abs() < 1e-6);
        assert_eq!(b, gen_matrix(64, 8, 100.0, 9).unwrap());
        assert!(gen_matrix(4, 8, 1.0, 0).is_err());
        assert!(gen_matrix(8, 4, 0.5, 0).is_err());
    }

    #[test]
    fn sandwich_examples() {
        let k = gen_matrix(6, 6, 5.0, 1).unwrap();
        let k = &k * k.transpose();
        assert!(spectral_sandwich(&k, &k, 0.0).unwrap().passed);
        let r = spectral_sandwich(&k, &(&k * 1.2), 0.1).unwrap();
        assert!(!r.passed);
        assert!(r.upper_min_eig < 0.0 && r.lower_min_eig > 0.0);
    }

    #[test]
    fn truncated_kernel_converges() {
        let a = gen_capped_rows(10, 3, 1.0, 4);
        let k = exact_kernel(&a).unwrap();
        let q = truncated_kernel(&a, 30).unwrap();
        assert!((k - q).amax() < 1e-14);
    }

    #[test]
    fn capped_rows_respect_radius() {
        let a = gen_capped_rows(50, 4, 1.0, 8);
        assert!(a.row_iter().all(|r| r.norm() <= 1.0 + 1e-15));
    }
}
