//! Attention kernel regression `min ‖exp(A·Aᵀ)·x − b‖₂`.
//!
//! The kernel `G = exp(A·Aᵀ)` (entrywise, rows of `A` are the points) is
//! approximated by `W_gᵀ·W_g`, where `W_g` stacks tensor sketches of the
//! Taylor terms `(A·Aᵀ)^{∘l}/l!` for `l = 0..=q`. Regression against the
//! approximate kernel runs through an SVD-preconditioned gradient descent or,
//! when the factor has at least as many rows as points, a dense solve.

mod checks;
mod factor;
mod lim_rand;
mod solve;

pub use checks::{kernel_entry_bound_check, psd_minor_check, taylor_tail_check, EntryBoundReport, MinorReport, TailReport};
pub use factor::{build_kernel_factor, truncation_degree, KernelConfig, KernelFactor};
pub use lim_rand::{tensor_sketch_lim_rand, LimRandSketch};
pub use solve::{
    attention_kernel_regression, preconditioned_gd, KernelBranch, KernelPreconditioner, KernelReport,
};

use crate::linalg::mat_t_vec;
use crate::DenseMatrix;

/// `G[i][j] = exp(⟨aᵢ, aⱼ⟩)` for the rows `aᵢ` of `A`.
pub fn exact_attention_kernel(a: &DenseMatrix) -> DenseMatrix {
    let gram = a * a.transpose();
    gram.map(f64::exp)
}

/// `exp(A·Aᵀ)·x` without storing the kernel.
pub fn kernel_apply(a: &DenseMatrix, x: &[f64]) -> Vec<f64> {
    let n = a.nrows();
    let at = a.transpose();
    (0..n)
        .map(|i| {
            let ai: Vec<f64> = at.column(i).iter().copied().collect();
            let inner = mat_t_vec(&at, &ai);
            inner.iter().zip(x).map(|(g, xj)| g.exp() * xj).sum()
        })
        .collect()
}

/// `ln(l!)`.
pub(crate) fn ln_factorial(l: usize) -> f64 {
    (2..=l).map(|k| (k as f64).ln()).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::mat_vec;
    use crate::oracle::gaussian;

    #[test]
    fn zero_data_gives_ones() {
        let g = exact_attention_kernel(&DenseMatrix::zeros(2, 3));
        assert_eq!(g, DenseMatrix::from_element(2, 2, 1.0));
    }

    #[test]
    fn single_unit_row() {
        let a = DenseMatrix::from_row_slice(1, 2, &[0.6, 0.8]);
        let g = exact_attention_kernel(&a);
        assert!((g[(0, 0)] - std::f64::consts::E).abs() < 1e-15);
    }

    #[test]
    fn matches_entrywise_definition() {
        let a = gaussian(8, 4, 3) * 0.3;
        let g = exact_attention_kernel(&a);
        for i in 0..8 {
            for j in 0..8 {
                let ip: f64 = (0..4).map(|k| a[(i, k)] * a[(j, k)]).sum();
                assert!((g[(i, j)] - ip.exp()).abs() <= 1e-14 * ip.exp());
            }
        }
        let x: Vec<f64> = (0..8).map(|i| i as f64 - 3.5).collect();
        let dense = mat_vec(&g, &x);
        for (u, v) in kernel_apply(&a, &x).iter().zip(&dense) {
            assert!((u - v).abs() < 1e-12);
        }
    }

    #[test]
    fn log_factorials() {
        assert_eq!(ln_factorial(0), 0.0);
        assert_eq!(ln_factorial(1), 0.0);
        assert!((ln_factorial(5) - 120f64.ln()).abs() < 1e-13);
    }
}
