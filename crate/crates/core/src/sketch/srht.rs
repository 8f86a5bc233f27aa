use super::fwht::{fwht_in_place, hadamard_entry};
use super::Sketch;
use crate::linalg::next_pow2;
use crate::rng::{self, STREAM_ROWS, STREAM_SIGNS};
use crate::{DenseMatrix, Error, Result};
use rand::Rng;
use rayon::prelude::*;

/// Multiplier in the default SRHT target dimension `⌈c·ε⁻²·d·ln(n/δ)⌉`.
pub const DEFAULT_EMBEDDING_CONSTANT: f64 = 8.0;

/// Rows needed for an SRHT to embed a `d`-dimensional subspace of `Rⁿ` with
/// distortion `eps` and failure probability `delta`.
pub fn embedding_dim(n: usize, d: usize, eps: f64, delta: f64, constant: f64) -> usize {
    let rows = constant * d as f64 * (n as f64 / delta).ln() / (eps * eps);
    (rows.ceil() as usize).max(1)
}

/// `S = (1/√m)·P·H·D` acting on `Rⁿ` zero-padded to the next power of two.
///
/// `D` is a random ±1 diagonal, `H` the unnormalized Hadamard matrix and `P`
/// samples `m` rows uniformly with replacement. Only the signs and the sampled
/// row indices are stored.
#[derive(Clone, Debug, PartialEq)]
pub struct SrhtSketch {
    n: usize,
    m: usize,
    n_pad: usize,
    signs: Vec<f64>,
    sample_rows: Vec<usize>,
    seed: u64,
}

impl SrhtSketch {
    pub fn new(n: usize, m: usize, seed: u64) -> Result<Self> {
        if n == 0 || m == 0 {
            return Err(Error::Dimension(format!(
                "SRHT needs n >= 1 and m >= 1, got n = {n}, m = {m}"
            )));
        }
        let n_pad = next_pow2(n);
        let signs = random_signs(n_pad, seed, STREAM_SIGNS);
        let mut rows_rng = rng::stream(seed, STREAM_ROWS);
        let sample_rows = (0..m).map(|_| rows_rng.random_range(0..n_pad)).collect();
        Ok(Self {
            n,
            m,
            n_pad,
            signs,
            sample_rows,
            seed,
        })
    }

    /// The unsampled transform: every padded row exactly once, so
    /// `S = H·D/√n_pad` is an isometry on `Rⁿ`.
    pub fn full(n: usize, seed: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::Dimension("SRHT needs n >= 1".into()));
        }
        let n_pad = next_pow2(n);
        Ok(Self {
            n,
            m: n_pad,
            n_pad,
            signs: random_signs(n_pad, seed, STREAM_SIGNS),
            sample_rows: (0..n_pad).collect(),
            seed,
        })
    }

    /// A sketch sized by [`embedding_dim`]. When that size reaches the padded
    /// dimension the unsampled transform ([`SrhtSketch::full`]) is returned.
    pub fn for_subspace(
        n: usize,
        d: usize,
        eps: f64,
        delta: f64,
        constant: f64,
        seed: u64,
    ) -> Result<Self> {
        let m = embedding_dim(n, d, eps, delta, constant);
        if m >= next_pow2(n) {
            Self::full(n, seed)
        } else {
            Self::new(n, m, seed)
        }
    }

    /// Builds a sketch from explicit signs and rows; the padded dimension is
    /// `signs.len()`, which must be a power of two not smaller than `n`.
    pub fn from_parts(n: usize, signs: Vec<f64>, sample_rows: Vec<usize>) -> Result<Self> {
        let n_pad = signs.len();
        if n == 0 || n_pad < n || !n_pad.is_power_of_two() || sample_rows.is_empty() {
            return Err(Error::Dimension(format!(
                "invalid SRHT parts: n = {n}, {n_pad} signs, {} rows",
                sample_rows.len()
            )));
        }
        if signs.iter().any(|&s| s != 1.0 && s != -1.0) {
            return Err(Error::Parameter("SRHT signs must be +1 or -1".into()));
        }
        if sample_rows.iter().any(|&r| r >= n_pad) {
            return Err(Error::Dimension("SRHT row index out of range".into()));
        }
        Ok(Self {
            n,
            m: sample_rows.len(),
            n_pad,
            signs,
            sample_rows,
            seed: 0,
        })
    }

    pub fn padded_dim(&self) -> usize {
        self.n_pad
    }

    pub fn signs(&self) -> &[f64] {
        &self.signs
    }

    pub fn sample_rows(&self) -> &[usize] {
        &self.sample_rows
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// True when every padded row is sampled once, in order.
    pub fn is_full(&self) -> bool {
        self.m == self.n_pad && self.sample_rows.iter().enumerate().all(|(i, &r)| i == r)
    }

    fn scale(&self) -> f64 {
        1.0 / (self.m as f64).sqrt()
    }

    /// Applies the sketch to a vector using the caller's scratch buffer of length `n_pad`.
    fn apply_into(&self, x: &[f64], buf: &mut [f64], out: &mut [f64]) {
        buf.fill(0.0);
        for ((b, &s), &v) in buf.iter_mut().zip(&self.signs).zip(x) {
            *b = s * v;
        }
        fwht_in_place(buf).expect("padded length is a power of two");
        let scale = self.scale();
        for (o, &r) in out.iter_mut().zip(&self.sample_rows) {
            *o = scale * buf[r];
        }
    }

    pub fn apply_vec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.n {
            return Err(Error::Dimension(format!(
                "SRHT expects length {}, got {}",
                self.n,
                x.len()
            )));
        }
        let mut buf = vec![0.0; self.n_pad];
        let mut out = vec![0.0; self.m];
        self.apply_into(x, &mut buf, &mut out);
        Ok(out)
    }

    /// `Sᵀ y = (1/√m)·D·H·Pᵀ y`, truncated to the unpadded dimension.
    pub fn apply_transpose_vec(&self, y: &[f64]) -> Result<Vec<f64>> {
        if y.len() != self.m {
            return Err(Error::Dimension(format!(
                "SRHT transpose expects length {}, got {}",
                self.m,
                y.len()
            )));
        }
        let mut buf = vec![0.0; self.n_pad];
        for (&r, &v) in self.sample_rows.iter().zip(y) {
            buf[r] += v;
        }
        fwht_in_place(&mut buf)?;
        let scale = self.scale();
        Ok(buf
            .iter()
            .zip(&self.signs)
            .take(self.n)
            .map(|(b, s)| scale * s * b)
            .collect())
    }

    /// `Sᵀ Y` column by column.
    pub fn apply_transpose(&self, y: &DenseMatrix) -> Result<DenseMatrix> {
        if y.nrows() != self.m {
            return Err(Error::Dimension(format!(
                "SRHT transpose expects {} rows, got {}",
                self.m,
                y.nrows()
            )));
        }
        let cols: Vec<Vec<f64>> = (0..y.ncols())
            .into_par_iter()
            .map(|j| {
                let col: Vec<f64> = y.column(j).iter().copied().collect();
                self.apply_transpose_vec(&col)
            })
            .collect::<Result<_>>()?;
        Ok(DenseMatrix::from_fn(self.n, y.ncols(), |i, j| cols[j][i]))
    }

    /// Dense `m × n` materialization, computed entry by entry from the Hadamard
    /// sign formula rather than through the fast transform.
    pub fn to_dense(&self) -> DenseMatrix {
        let scale = self.scale();
        DenseMatrix::from_fn(self.m, self.n, |k, i| {
            scale * hadamard_entry(self.sample_rows[k], i) * self.signs[i]
        })
    }
}

impl Sketch for SrhtSketch {
    fn input_dim(&self) -> usize {
        self.n
    }

    fn output_dim(&self) -> usize {
        self.m
    }

    /// Column-wise sign flip, transform, subsample and scale. Columns are
    /// independent, so the parallel result equals the sequential one bit for bit.
    fn apply(&self, a: &DenseMatrix) -> Result<DenseMatrix> {
        if a.nrows() != self.n {
            return Err(Error::Dimension(format!(
                "SRHT built for {} rows, matrix has {}",
                self.n,
                a.nrows()
            )));
        }
        let mut out = DenseMatrix::zeros(self.m, a.ncols());
        out.as_mut_slice()
            .par_chunks_mut(self.m.max(1))
            .zip(a.as_slice().par_chunks(self.n))
            .for_each_init(
                || vec![0.0; self.n_pad],
                |buf, (dst, src)| self.apply_into(src, buf, dst),
            );
        Ok(out)
    }
}

pub(super) fn random_signs(len: usize, seed: u64, stream: u64) -> Vec<f64> {
    let mut rng = rng::stream(seed, stream);
    (0..len)
        .map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 })
        .collect()
}
