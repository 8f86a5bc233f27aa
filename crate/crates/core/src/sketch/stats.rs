use super::Sketch;
use crate::linalg::{orthonormal_basis, singular_values, symmetric_norm};
use crate::{DenseMatrix, Error, Result};
use serde::Serialize;

#[derive(Clone, Debug, Serialize)]
pub struct TrialDistortion {
    pub min_singular: f64,
    pub max_singular: f64,
    /// `max |σᵢ² − 1|` from the singular values of `S·U`.
    pub gram_distortion_svd: f64,
    /// `‖UᵀSᵀSU − I‖₂` from a symmetric eigensolve.
    pub gram_distortion_direct: f64,
}

impl TrialDistortion {
    pub fn epsilon(&self) -> f64 {
        (1.0 - self.min_singular).abs().max((self.max_singular - 1.0).abs())
    }
}

/// Singular-value range of `S·U` over repeated sketch draws, `U` an
/// orthonormal basis of the tested matrix.
#[derive(Clone, Debug, Serialize)]
pub struct EmbeddingReport {
    pub min_singular: f64,
    pub max_singular: f64,
    pub epsilon_observed: f64,
    pub trials: usize,
    pub failure_rate: f64,
    pub per_trial: Vec<TrialDistortion>,
}

/// Draws `trials` sketches from `factory` (called with the trial index) and
/// records how far each one is from an isometry on the column space of `a`.
/// A trial fails when some singular value of `S·U` leaves `[1 − ε, 1 + ε]`.
pub fn check_embedding<S, F>(
    mut factory: F,
    a: &DenseMatrix,
    epsilon: f64,
    trials: usize,
) -> Result<EmbeddingReport>
where
    S: Sketch,
    F: FnMut(usize) -> Result<S>,
{
    if trials == 0 {
        return Err(Error::Parameter("trials must be positive".into()));
    }
    let u = orthonormal_basis(a)?;
    let d = u.ncols();
    let mut per_trial = Vec::with_capacity(trials);
    for t in 0..trials {
        let su = factory(t)?.apply(&u)?;
        let sv = singular_values(&su);
        let max_singular = sv.first().copied().unwrap_or(0.0);
        let min_singular = if sv.len() < d { 0.0 } else { sv[d - 1] };
        let gram_distortion_svd = (max_singular * max_singular - 1.0)
            .abs()
            .max((min_singular * min_singular - 1.0).abs());
        let gram = su.transpose() * &su - DenseMatrix::identity(d, d);
        per_trial.push(TrialDistortion {
            min_singular,
            max_singular,
            gram_distortion_svd,
            gram_distortion_direct: symmetric_norm(&gram),
        });
    }
    let failures = per_trial.iter().filter(|t| t.epsilon() > epsilon).count();
    Ok(EmbeddingReport {
        min_singular: per_trial.iter().map(|t| t.min_singular).fold(f64::INFINITY, f64::min),
        max_singular: per_trial.iter().map(|t| t.max_singular).fold(0.0, f64::max),
        epsilon_observed: per_trial.iter().map(TrialDistortion::epsilon).fold(0.0, f64::max),
        trials,
        failure_rate: failures as f64 / trials as f64,
        per_trial,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct FampReport {
    pub trials: usize,
    pub failure_rate: f64,
    /// Largest `‖AᵀB − AᵀSᵀSB‖_F / (‖A‖_F‖B‖_F)` seen (0 when either input is 0).
    pub max_relative_error: f64,
}

/// Estimates how often `‖AᵀB − AᵀSᵀSB‖_F ≤ ε‖A‖_F‖B‖_F` fails.
pub fn check_famp<S, F>(
    mut factory: F,
    a: &DenseMatrix,
    b: &DenseMatrix,
    epsilon: f64,
    trials: usize,
) -> Result<FampReport>
where
    S: Sketch,
    F: FnMut(usize) -> Result<S>,
{
    if a.nrows() != b.nrows() {
        return Err(Error::Dimension(format!(
            "A has {} rows, B has {}",
            a.nrows(),
            b.nrows()
        )));
    }
    if trials == 0 {
        return Err(Error::Parameter("trials must be positive".into()));
    }
    let exact = a.transpose() * b;
    let scale = a.norm() * b.norm();
    let mut failures = 0;
    let mut max_relative_error = 0.0_f64;
    for t in 0..trials {
        let s = factory(t)?;
        let approx = s.apply(a)?.transpose() * s.apply(b)?;
        let err = (&exact - approx).norm();
        if err > epsilon * scale {
            failures += 1;
        }
        if scale > 0.0 {
            max_relative_error = max_relative_error.max(err / scale);
        }
    }
    Ok(FampReport {
        trials,
        failure_rate: failures as f64 / trials as f64,
        max_relative_error,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sketch::SrhtSketch;

    fn tall(n: usize, d: usize) -> DenseMatrix {
        DenseMatrix::from_fn(n, d, |i, j| ((i * 31 + j * 17) as f64 * 0.123).sin() + if i == j { 2.0 } else { 0.0 })
    }

    #[test]
    fn structural_identity_case() {
        // First d columns of I, all rows sampled in order, all signs +1.
        let (n, d) = (8, 3);
        let a = DenseMatrix::from_fn(n, d, |i, j| if i == j { 1.0 } else { 0.0 });
        let report = check_embedding(
            |_| SrhtSketch::from_parts(n, vec![1.0; n], (0..n).collect()),
            &a,
            0.25,
            1,
        )
        .unwrap();
        assert!(report.epsilon_observed.is_finite());
        assert!(report.min_singular <= report.max_singular);
        // Sampling every row once makes the transform orthogonal.
        assert!(report.epsilon_observed < 1e-12);
    }

    #[test]
    fn two_routes_to_distortion_agree() {
        let a = tall(64, 5);
        let report = check_embedding(|t| SrhtSketch::new(64, 20, t as u64), &a, 0.5, 10).unwrap();
        for t in &report.per_trial {
            assert!((t.gram_distortion_svd - t.gram_distortion_direct).abs() < 1e-10);
        }
        assert!((0.0..=1.0).contains(&report.failure_rate));
    }

    #[test]
    fn rank_deficient_rejected() {
        let mut a = tall(16, 3);
        let c = a.column(0).clone_owned();
        a.set_column(2, &c);
        let res = check_embedding(|t| SrhtSketch::new(16, 8, t as u64), &a, 0.5, 2);
        assert!(matches!(res, Err(Error::Rank(_))));
    }

    #[test]
    fn famp_zero_inputs() {
        let z = DenseMatrix::zeros(8, 2);
        let r = check_famp(|t| SrhtSketch::new(8, 2, t as u64), &z, &z, 0.1, 5).unwrap();
        assert_eq!(r.failure_rate, 0.0);
        assert_eq!(r.max_relative_error, 0.0);
    }

    #[test]
    fn famp_dimension_mismatch() {
        let r = check_famp(
            |t| SrhtSketch::new(8, 2, t as u64),
            &DenseMatrix::zeros(8, 2),
            &DenseMatrix::zeros(7, 2),
            0.1,
            1,
        );
        assert!(matches!(r, Err(Error::Dimension(_))));
    }

    #[test]
    fn famp_large_and_tiny_sketches() {
        let a = orthonormal_basis(&tall(256, 4)).unwrap();
        let big = check_famp(|t| SrhtSketch::new(256, 2048, t as u64), &a, &a, 0.25, 40).unwrap();
        assert!(big.failure_rate <= 0.05, "{big:?}");
        let b = tall(256, 4);
        let tiny = check_famp(|t| SrhtSketch::new(256, 1, t as u64), &a, &b, 0.05, 40).unwrap();
        assert!(tiny.failure_rate >= 0.9, "{tiny:?}");
    }
}
