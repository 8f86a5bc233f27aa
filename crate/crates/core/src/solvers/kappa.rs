use super::{build_preconditioner_with, check_tall, SolverConfig};
use crate::linalg::{mat_t_vec, mat_vec, norm, singular_values};
use crate::oracle::gaussian_vec;
use crate::{DenseMatrix, Error, Result};

/// Largest `min(n, d)` handled by an exact SVD.
const EXACT_LIMIT: usize = 512;
const POWER_ROUNDS: usize = 30;

/// Condition number of `A`, inflated by `config.kappa_inflation`.
///
/// Small problems use an exact SVD. Larger ones take `σ_max` from power
/// iteration on `AᵀA` and `σ_min` from the triangular factor of a sketch of
/// `A`, whose singular values match those of `A` up to the sketch distortion.
pub fn estimate_condition(a: &DenseMatrix, config: &SolverConfig, seed: u64) -> Result<f64> {
    check_tall(a)?;
    let (sigma_min, sigma_max) = if a.ncols().min(a.nrows()) <= EXACT_LIMIT {
        let s = singular_values(a);
        (*s.last().unwrap(), s[0])
    } else {
        let p = build_preconditioner_with(a, 0.01, seed, config)?;
        let (lo, _) = p.estimated_singular_range();
        (lo / (1.0 + config.eps_ose), power_sigma_max(a, seed))
    };
    if !(sigma_min > 0.0) || sigma_max / sigma_min > 1e15 {
        return Err(Error::Rank(format!(
            "condition number estimate {sigma_max:e}/{sigma_min:e} is not finite"
        )));
    }
    Ok(config.kappa_inflation * sigma_max / sigma_min)
}

fn power_sigma_max(a: &DenseMatrix, seed: u64) -> f64 {
    let mut v = gaussian_vec(a.ncols(), seed);
    let mut lambda = 0.0;
    for _ in 0..POWER_ROUNDS {
        let nv = norm(&v);
        if nv == 0.0 {
            return 0.0;
        }
        v.iter_mut().for_each(|x| *x /= nv);
        v = mat_t_vec(a, &mat_vec(a, &v));
        lambda = norm(&v);
    }
    lambda.sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::gen_matrix;

    #[test]
    fn exact_path_inflates() {
        let a = gen_matrix(64, 4, 10.0, 1).unwrap();
        let k = estimate_condition(&a, &SolverConfig::default(), 0).unwrap();
        assert!((k - 15.0).abs() < 1e-8);
    }

    #[test]
    fn power_iteration_finds_top_singular_value() {
        let a = gen_matrix(200, 6, 50.0, 4).unwrap();
        let s = power_sigma_max(&a, 3);
        assert!((s - 50.0).abs() / 50.0 < 1e-3);
    }

    #[test]
    fn rank_deficient_is_an_error() {
        let a = DenseMatrix::zeros(8, 2);
        assert!(estimate_condition(&a, &SolverConfig::default(), 0).is_err());
    }
}
