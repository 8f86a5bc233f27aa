use super::{check_tall, SolverConfig};
use crate::error::check_unit_interval;
use crate::linalg::{mat_t_vec, mat_vec, singular_values, thin_qr, upper_triangular_inverse};
use crate::sketch::{Sketch, SrhtSketch};
use crate::{DenseMatrix, Result};

/// `R = T⁻¹` from the thin QR `S·A = Q·T` of an SRHT sketch of `A`.
///
/// On the embedding event the singular values of `A·R` lie in
/// `[1 − ε, 1 + ε]` for the sketch distortion `ε`.
#[derive(Clone, Debug)]
pub struct Preconditioner {
    r: DenseMatrix,
    t: DenseMatrix,
    q: DenseMatrix,
    sketch: SrhtSketch,
}

impl Preconditioner {
    /// The `d × d` upper-triangular preconditioner.
    pub fn r(&self) -> &DenseMatrix {
        &self.r
    }

    /// The triangular QR factor `T = R⁻¹`.
    pub fn triangular_factor(&self) -> &DenseMatrix {
        &self.t
    }

    /// Orthonormal factor `Q` of the sketched matrix.
    pub fn sketched_basis(&self) -> &DenseMatrix {
        &self.q
    }

    pub fn sketch(&self) -> &SrhtSketch {
        &self.sketch
    }

    pub fn sketch_dim(&self) -> usize {
        self.sketch.output_dim()
    }

    pub fn seed(&self) -> u64 {
        self.sketch.seed()
    }

    /// Condition number of `A·R`, computed densely.
    pub fn kappa_ar(&self, a: &DenseMatrix) -> f64 {
        let s = singular_values(&(a * &self.r));
        match (s.first(), s.last()) {
            (Some(&hi), Some(&lo)) if lo > 0.0 => hi / lo,
            _ => f64::INFINITY,
        }
    }

    /// Singular values of `T`, which approximate those of `A`.
    pub fn estimated_singular_range(&self) -> (f64, f64) {
        let s = singular_values(&self.t);
        (*s.last().unwrap_or(&0.0), *s.first().unwrap_or(&0.0))
    }

    pub(crate) fn apply_r(&self, z: &[f64]) -> Vec<f64> {
        mat_vec(&self.r, z)
    }

    pub(crate) fn apply_r_t(&self, x: &[f64]) -> Vec<f64> {
        mat_t_vec(&self.r, x)
    }
}

/// Preconditioner with the default sketch sizing.
pub fn build_preconditioner(a: &DenseMatrix, delta_ose: f64, seed: u64) -> Result<Preconditioner> {
    build_preconditioner_with(a, delta_ose, seed, &SolverConfig::default())
}

/// Sketch size `⌈c·ε⁻²·d·ln(n/δ)⌉` with `ε = config.eps_ose`, or
/// `config.sketch_rows` when set. A size that reaches the padded row count
/// uses the unsampled transform.
pub fn build_preconditioner_with(
    a: &DenseMatrix,
    delta_ose: f64,
    seed: u64,
    config: &SolverConfig,
) -> Result<Preconditioner> {
    check_tall(a)?;
    check_unit_interval("delta_ose", delta_ose, 1.0)?;
    let (n, d) = a.shape();
    let sketch = match config.sketch_rows {
        Some(m) => SrhtSketch::new(n, m, seed)?,
        None => SrhtSketch::for_subspace(n, d, config.eps_ose, delta_ose, config.embedding_constant, seed)?,
    };
    let sa = sketch.apply(a)?;
    let (q, t) = thin_qr(&sa)?;
    let r = upper_triangular_inverse(&t)?;
    Ok(Preconditioner { r, t, q, sketch })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::gen_matrix;
    use crate::Error;

    #[test]
    fn identity_like_input() {
        let mut a = DenseMatrix::zeros(64, 4);
        for i in 0..4 {
            a[(i, i)] = 1.0;
        }
        let p = build_preconditioner(&a, 0.01, 1).unwrap();
        assert!(p.kappa_ar(&a) <= 1.0 + 1e-10);
        assert!(p.sketch().is_full());
    }

    #[test]
    fn conditions_ill_posed_input() {
        let a = gen_matrix(512, 8, 1e4, 3).unwrap();
        let p = build_preconditioner(&a, 0.01, 9).unwrap();
        assert!(p.kappa_ar(&a) <= 1.1 / 0.9);
        let cfg = SolverConfig {
            sketch_rows: Some(256),
            ..SolverConfig::default()
        };
        let p = build_preconditioner_with(&a, 0.01, 9, &cfg).unwrap();
        assert_eq!(p.sketch_dim(), 256);
        assert!(p.kappa_ar(&a) < 3.0);
    }

    #[test]
    fn upper_triangular_factor() {
        let a = gen_matrix(128, 5, 10.0, 1).unwrap();
        let p = build_preconditioner(&a, 0.01, 2).unwrap();
        for i in 0..5 {
            for j in 0..i {
                assert_eq!(p.r()[(i, j)], 0.0);
            }
        }
        let prod = p.r() * p.triangular_factor();
        assert!((prod - DenseMatrix::identity(5, 5)).amax() < 1e-10);
    }

    #[test]
    fn rank_deficient_fails() {
        let mut a = DenseMatrix::zeros(32, 3);
        for i in 0..32 {
            a[(i, 0)] = i as f64;
            a[(i, 1)] = 2.0 * i as f64;
            a[(i, 2)] = 1.0;
        }
        assert!(matches!(build_preconditioner(&a, 0.01, 0), Err(Error::Rank(_))));
    }

    #[test]
    fn shape_checks() {
        assert!(matches!(
            build_preconditioner(&DenseMatrix::zeros(2, 3), 0.01, 0),
            Err(Error::Dimension(_))
        ));
        assert!(build_preconditioner(&DenseMatrix::identity(3, 3), 1.5, 0).is_err());
    }
}
