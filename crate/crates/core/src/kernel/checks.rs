use crate::linalg::{symmetric_norm, RANK_TOL};
use crate::oracle::{exact_kernel, truncated_kernel};
use crate::{DenseMatrix, Error, Result};
use serde::Serialize;

#[derive(Clone, Debug, Serialize)]
pub struct EntryBoundReport {
    /// `eps ≤ e^{−4r}/4`, the precondition of the bound.
    pub condition_holds: bool,
    pub lower: f64,
    pub upper: f64,
    /// Entries outside `[lower, upper]`.
    pub failures: Vec<(usize, usize)>,
    pub passed: bool,
}

/// Checks every entry of `B` against `[(1−√ε)e^{−r}, (1+ε)e^{r}]`.
pub fn kernel_entry_bound_check(b: &DenseMatrix, r: f64, eps: f64) -> EntryBoundReport {
    let lower = (1.0 - eps.sqrt()) * (-r).exp();
    let upper = (1.0 + eps) * r.exp();
    let failures: Vec<(usize, usize)> = (0..b.nrows())
        .flat_map(|i| (0..b.ncols()).map(move |j| (i, j)))
        .filter(|&(i, j)| !(b[(i, j)] >= lower && b[(i, j)] <= upper))
        .collect();
    EntryBoundReport {
        condition_holds: eps <= 0.25 * (-4.0 * r).exp(),
        lower,
        upper,
        passed: failures.is_empty(),
        failures,
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct MinorReport {
    /// Pairs with `B_ii·B_jj < B_ij² − 1e-10`.
    pub failures: Vec<(usize, usize)>,
    pub passed: bool,
}

/// Checks `B_ii·B_jj ≥ B_ij²` for every pair `i < j`.
pub fn psd_minor_check(b: &DenseMatrix) -> MinorReport {
    let n = b.nrows().min(b.ncols());
    let failures: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .filter(|&(i, j)| b[(i, i)] * b[(j, j)] < b[(i, j)].powi(2) - 1e-10)
        .collect();
    MinorReport {
        passed: failures.is_empty(),
        failures,
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct TailReport {
    pub q: usize,
    /// `‖K − Q‖₂` for the degree-`q` Taylor truncation `Q`.
    pub tail_norm: f64,
    pub kernel_norm: f64,
    pub passed: bool,
}

/// Checks `‖K − Q_q‖₂ ≤ (ε/2)·‖K‖₂` with both kernels formed exactly.
pub fn taylor_tail_check(a: &DenseMatrix, q: usize, eps: f64) -> Result<TailReport> {
    if q == 0 {
        return Err(Error::Parameter("truncation degree must be at least 1".into()));
    }
    let k = exact_kernel(a)?;
    let tail = &k - truncated_kernel(a, q)?;
    let tail_norm = symmetric_norm(&tail);
    let kernel_norm = symmetric_norm(&k);
    Ok(TailReport {
        q,
        tail_norm,
        kernel_norm,
        passed: tail_norm <= 0.5 * eps * kernel_norm + RANK_TOL * kernel_norm,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::{build_kernel_factor, exact_attention_kernel, truncation_degree, KernelConfig};
    use crate::oracle::gen_capped_rows;

    #[test]
    fn entry_bounds() {
        let r = 0.1;
        let eps = 0.1 * (-0.4f64).exp();
        let b = DenseMatrix::from_element(3, 3, 1.0);
        let rep = kernel_entry_bound_check(&b, r, eps);
        assert!(rep.passed && rep.condition_holds);
        let mut bad = b.clone();
        bad[(1, 2)] = 2.0 * r.exp();
        assert_eq!(kernel_entry_bound_check(&bad, r, eps).failures, vec![(1, 2)]);
    }

    #[test]
    fn minors() {
        assert!(psd_minor_check(&DenseMatrix::identity(4, 4)).passed);
        let b = DenseMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert_eq!(psd_minor_check(&b).failures, vec![(0, 1)]);
        let a = gen_capped_rows(10, 3, 1.0, 1);
        let f = build_kernel_factor(&a, 0.5, 0.1, 2, &KernelConfig::default()).unwrap();
        assert!(psd_minor_check(&f.gram()).passed);
    }

    #[test]
    fn tail_bound_at_formula_degree() {
        let a = gen_capped_rows(32, 4, 1.0, 3);
        let q = truncation_degree(32, 0.5, 1.0, 2.0);
        assert!(taylor_tail_check(&a, q, 0.5).unwrap().passed);
        assert!(!taylor_tail_check(&a, 1, 0.01).unwrap().passed);
    }

    #[test]
    fn entries_of_factor_on_clustered_data() {
        // Small radius keeps every inner product within [−r, r].
        let a = gen_capped_rows(8, 3, 0.2, 2);
        let r: f64 = 0.04;
        let eps = 0.2 * (-4.0 * r).exp();
        let k = exact_attention_kernel(&a);
        assert!(kernel_entry_bound_check(&k, r, eps).passed);
    }
}
