use super::fwht::{fwht_in_place, hadamard_entry};
use super::srht::random_signs;
use crate::linalg::next_pow2;
use crate::rng::{self, STREAM_PAIRS, STREAM_SIGNS, STREAM_SIGNS_SECOND};
use crate::{DenseMatrix, Error, Result};
use rand::Rng;

/// `S = (1/√m)·P·(H·D₁ ⊗ H·D₂)`, evaluated on `x ⊗ y` without forming the tensor.
///
/// `D₁` and `D₂` come from separate keystreams; `P` samples `m` index pairs
/// of `[d_in]²` with replacement.
#[derive(Clone, Debug, PartialEq)]
pub struct TensorSrhtSketch {
    m: usize,
    d_in: usize,
    signs1: Vec<f64>,
    signs2: Vec<f64>,
    sample_pairs: Vec<(usize, usize)>,
    seed: u64,
}

impl TensorSrhtSketch {
    /// Sketch for factors of length up to `d`, padded to a power of two.
    pub fn new(d: usize, m: usize, seed: u64) -> Result<Self> {
        if d == 0 || m == 0 {
            return Err(Error::Dimension(format!(
                "TensorSRHT needs d >= 1 and m >= 1, got d = {d}, m = {m}"
            )));
        }
        let d_in = next_pow2(d);
        let mut pair_rng = rng::stream(seed, STREAM_PAIRS);
        let sample_pairs = (0..m)
            .map(|_| (pair_rng.random_range(0..d_in), pair_rng.random_range(0..d_in)))
            .collect();
        Ok(Self {
            m,
            d_in,
            signs1: random_signs(d_in, seed, STREAM_SIGNS),
            signs2: random_signs(d_in, seed, STREAM_SIGNS_SECOND),
            sample_pairs,
            seed,
        })
    }

    pub fn output_dim(&self) -> usize {
        self.m
    }

    pub fn factor_dim(&self) -> usize {
        self.d_in
    }

    pub fn signs(&self) -> (&[f64], &[f64]) {
        (&self.signs1, &self.signs2)
    }

    pub fn sample_pairs(&self) -> &[(usize, usize)] {
        &self.sample_pairs
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn apply(&self, x: &[f64], y: &[f64]) -> Result<Vec<f64>> {
        let mut scratch = TensorScratch::new(self.d_in);
        let mut out = vec![0.0; self.m];
        self.apply_into(x, y, &mut scratch, &mut out)?;
        Ok(out)
    }

    pub(crate) fn apply_into(
        &self,
        x: &[f64],
        y: &[f64],
        scratch: &mut TensorScratch,
        out: &mut [f64],
    ) -> Result<()> {
        if x.len() > self.d_in || y.len() > self.d_in {
            return Err(Error::Dimension(format!(
                "TensorSRHT factors have length {} and {}, limit is {}",
                x.len(),
                y.len(),
                self.d_in
            )));
        }
        let TensorScratch { hx, hy } = scratch;
        signed_transform(x, &self.signs1, hx);
        signed_transform(y, &self.signs2, hy);
        let scale = 1.0 / (self.m as f64).sqrt();
        for (o, &(i, j)) in out.iter_mut().zip(&self.sample_pairs) {
            *o = scale * hx[i] * hy[j];
        }
        Ok(())
    }

    /// Dense `m × d_in²` materialization, column `a·d_in + b` pairing with
    /// `(x ⊗ y)[a·d_in + b] = x_a·y_b`. Refused beyond `d_in = 64`.
    pub fn to_dense(&self) -> Result<DenseMatrix> {
        if self.d_in > 64 {
            return Err(Error::Size(format!(
                "dense TensorSRHT with d_in = {} is too large",
                self.d_in
            )));
        }
        let scale = 1.0 / (self.m as f64).sqrt();
        let d = self.d_in;
        Ok(DenseMatrix::from_fn(self.m, d * d, |k, col| {
            let (a, b) = (col / d, col % d);
            let (i, j) = self.sample_pairs[k];
            scale
                * hadamard_entry(i, a)
                * self.signs1[a]
                * hadamard_entry(j, b)
                * self.signs2[b]
        }))
    }
}

pub(crate) struct TensorScratch {
    hx: Vec<f64>,
    hy: Vec<f64>,
}

impl TensorScratch {
    pub(crate) fn new(d_in: usize) -> Self {
        Self {
            hx: vec![0.0; d_in],
            hy: vec![0.0; d_in],
        }
    }
}

fn signed_transform(x: &[f64], signs: &[f64], buf: &mut [f64]) {
    buf.fill(0.0);
    for ((b, &s), &v) in buf.iter_mut().zip(signs).zip(x) {
        *b = s * v;
    }
    fwht_in_place(buf).expect("factor length is a power of two");
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::norm;

    fn kron(x: &[f64], y: &[f64], d: usize) -> Vec<f64> {
        let mut out = vec![0.0; d * d];
        for (a, xa) in x.iter().enumerate() {
            for (b, yb) in y.iter().enumerate() {
                out[a * d + b] = xa * yb;
            }
        }
        out
    }

    #[test]
    fn zero_factor_gives_zero() {
        let s = TensorSrhtSketch::new(4, 6, 1).unwrap();
        assert!(s.apply(&[0.0; 4], &[1.0, 2.0, 3.0, 4.0]).unwrap().iter().all(|&v| v == 0.0));
        assert!(s.apply(&[1.0, 2.0], &[0.0; 3]).unwrap().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn independent_sign_streams() {
        let s = TensorSrhtSketch::new(64, 4, 5).unwrap();
        let (a, b) = s.signs();
        assert_ne!(a, b);
    }

    #[test]
    fn rejects_long_factor() {
        let s = TensorSrhtSketch::new(4, 3, 1).unwrap();
        assert!(matches!(s.apply(&[1.0; 5], &[1.0]), Err(Error::Dimension(_))));
    }

    #[test]
    fn matches_dense_kronecker() {
        for (d, seed) in [(4usize, 17u64), (3, 2), (16, 9)] {
            let s = TensorSrhtSketch::new(d, 7, seed).unwrap();
            let d_in = s.factor_dim();
            let x: Vec<f64> = (0..d).map(|i| (i as f64 * 0.7).cos()).collect();
            let y: Vec<f64> = (0..d).map(|i| (i as f64 * 1.3 + 0.2).sin()).collect();
            let mut xp = x.clone();
            xp.resize(d_in, 0.0);
            let mut yp = y.clone();
            yp.resize(d_in, 0.0);
            let dense = s.to_dense().unwrap() * nalgebra::DVector::from_vec(kron(&xp, &yp, d_in));
            let fast = s.apply(&x, &y).unwrap();
            for (a, b) in fast.iter().zip(dense.iter()) {
                assert!((a - b).abs() < 1e-12, "d = {d}");
            }
        }
    }

    #[test]
    fn norm_preserved_in_expectation() {
        // Unit x, y: the Monte-Carlo mean of ‖S(x⊗y)‖² over seeds should be near 1.
        let x: Vec<f64> = {
            let v: Vec<f64> = (0..8).map(|i| (i as f64 + 0.5).sin()).collect();
            let n = norm(&v);
            v.iter().map(|a| a / n).collect()
        };
        let y: Vec<f64> = {
            let v: Vec<f64> = (0..8).map(|i| (2.0 * i as f64 - 3.0).cos()).collect();
            let n = norm(&v);
            v.iter().map(|a| a / n).collect()
        };
        let trials = 200;
        let mean: f64 = (0..trials)
            .map(|seed| {
                let s = TensorSrhtSketch::new(8, 16, seed).unwrap();
                norm(&s.apply(&x, &y).unwrap()).powi(2)
            })
            .sum::<f64>()
            / trials as f64;
        assert!((mean - 1.0).abs() < 0.1, "mean = {mean}");
    }
}
