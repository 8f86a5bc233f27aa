//! Small dense helpers shared by the solvers and the oracle.

use crate::{DenseMatrix, Error, Result};
use nalgebra::{SymmetricEigen, SVD};

/// Relative threshold below which a singular value (or a diagonal entry of a
/// triangular factor) counts as zero.
pub const RANK_TOL: f64 = 1e-12;

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn next_pow2(n: usize) -> usize {
    n.max(1).next_power_of_two()
}

/// `A x` for a slice `x`.
pub fn mat_vec(a: &DenseMatrix, x: &[f64]) -> Vec<f64> {
    let mut y = vec![0.0; a.nrows()];
    for (j, &xj) in x.iter().enumerate() {
        if xj == 0.0 {
            continue;
        }
        for (yi, aij) in y.iter_mut().zip(a.column(j).iter()) {
            *yi += aij * xj;
        }
    }
    y
}

/// `Aᵀ y` for a slice `y`.
pub fn mat_t_vec(a: &DenseMatrix, y: &[f64]) -> Vec<f64> {
    (0..a.ncols())
        .map(|j| a.column(j).iter().zip(y).map(|(aij, yi)| aij * yi).sum())
        .collect()
}

/// Singular values in descending order.
pub fn singular_values(a: &DenseMatrix) -> Vec<f64> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return Vec::new();
    }
    let mut s: Vec<f64> = SVD::new(a.clone(), false, false)
        .singular_values
        .iter()
        .copied()
        .collect();
    s.sort_by(|x, y| y.total_cmp(x));
    s
}

/// Eigenvalues of a symmetric matrix in ascending order.
pub fn symmetric_eigenvalues(a: &DenseMatrix) -> Vec<f64> {
    let mut e: Vec<f64> = SymmetricEigen::new(a.clone())
        .eigenvalues
        .iter()
        .copied()
        .collect();
    e.sort_by(f64::total_cmp);
    e
}

/// Spectral norm of a symmetric matrix.
pub fn symmetric_norm(a: &DenseMatrix) -> f64 {
    symmetric_eigenvalues(a)
        .into_iter()
        .fold(0.0_f64, |acc, e| acc.max(e.abs()))
}

/// Thin QR factors `(Q, R)` of a tall matrix, failing when `R` has a
/// negligible diagonal entry.
pub fn thin_qr(a: &DenseMatrix) -> Result<(DenseMatrix, DenseMatrix)> {
    if a.nrows() < a.ncols() {
        return Err(Error::Rank(format!(
            "{}x{} matrix has more columns than rows",
            a.nrows(),
            a.ncols()
        )));
    }
    let qr = a.clone().qr();
    let r = qr.r();
    let diag_max = r.diagonal().iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let diag_min = r.diagonal().iter().fold(f64::INFINITY, |m, v| m.min(v.abs()));
    if !(diag_max > 0.0) || diag_min <= RANK_TOL * diag_max {
        return Err(Error::Rank(format!(
            "triangular factor diagonal spans [{diag_min:e}, {diag_max:e}]"
        )));
    }
    Ok((qr.q(), r))
}

/// Orthonormal basis of the column space of a full-column-rank matrix.
pub fn orthonormal_basis(a: &DenseMatrix) -> Result<DenseMatrix> {
    thin_qr(a).map(|(q, _)| q)
}

/// Inverse of a nonsingular upper-triangular matrix.
pub fn upper_triangular_inverse(r: &DenseMatrix) -> Result<DenseMatrix> {
    let n = r.nrows();
    r.solve_upper_triangular(&DenseMatrix::identity(n, n))
        .ok_or_else(|| Error::Rank("singular triangular factor".into()))
}

pub fn is_symmetric(a: &DenseMatrix, tol: f64) -> bool {
    if a.nrows() != a.ncols() {
        return false;
    }
    let scale = a.amax().max(1.0);
    (0..a.nrows()).all(|i| (0..i).all(|j| (a[(i, j)] - a[(j, i)]).abs() <= tol * scale))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn qr_rejects_duplicate_columns() {
        let a = DenseMatrix::from_row_slice(3, 2, &[1.0, 1.0, 2.0, 2.0, 3.0, 3.0]);
        assert!(matches!(thin_qr(&a), Err(Error::Rank(_))));
    }

    #[test]
    fn triangular_inverse_roundtrip() {
        let r = DenseMatrix::from_row_slice(2, 2, &[2.0, 1.0, 0.0, 4.0]);
        let inv = upper_triangular_inverse(&r).unwrap();
        let id = &r * &inv;
        assert!((id - DenseMatrix::identity(2, 2)).amax() < 1e-15);
    }

    #[test]
    fn singular_values_sorted() {
        let a = DenseMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 10.0]);
        assert_eq!(singular_values(&a), vec![10.0, 1.0]);
    }
}
