use crate::sketch::{SrhtSketch, TensorSrhtSketch};
use crate::sketch::Sketch;
use crate::{Error, Result};

/// Degree-`p` tensor sketch with limited randomness: one SRHT `T` on the data
/// and one TensorSRHT `S` reused for every pairing.
///
/// With `w₀ = T·x` and `w_l = S(w_{l−1} ⊗ w_{l−1})`, the output combines the
/// `w_i` for the set bits `i` of `p`, lowest first: `z = w_{i₀}`, then
/// `z ← S(z ⊗ w_i)`. Its expected squared norm is `‖x‖^{2p}`.
pub fn tensor_sketch_lim_rand(x: &[f64], p: usize, s: &TensorSrhtSketch, t: &SrhtSketch) -> Result<Vec<f64>> {
    if p == 0 {
        return Err(Error::Parameter("tensor sketch degree must be at least 1".into()));
    }
    if t.output_dim() > s.factor_dim() || s.output_dim() > s.factor_dim() {
        return Err(Error::Dimension(format!(
            "TensorSRHT factor length {} cannot take T output {} and S output {}",
            s.factor_dim(),
            t.output_dim(),
            s.output_dim()
        )));
    }
    let mut scratch = crate::sketch::TensorScratch::new(s.factor_dim());
    lim_rand_with(x, p, s, t, &mut scratch)
}

pub(crate) fn lim_rand_with(
    x: &[f64],
    p: usize,
    s: &TensorSrhtSketch,
    t: &SrhtSketch,
    scratch: &mut crate::sketch::TensorScratch,
) -> Result<Vec<f64>> {
    let levels = usize::BITS - 1 - p.leading_zeros();
    let mut powers = Vec::with_capacity(levels as usize + 1);
    powers.push(t.apply_vec(x)?);
    for _ in 0..levels {
        let prev = powers.last().expect("non-empty");
        let mut next = vec![0.0; s.output_dim()];
        s.apply_into(prev, prev, scratch, &mut next)?;
        powers.push(next);
    }
    let mut bits = (0..=levels).filter(|i| p >> i & 1 == 1);
    let first = bits.next().expect("p >= 1 has a set bit");
    let mut z = powers[first as usize].clone();
    for i in bits {
        let mut next = vec![0.0; s.output_dim()];
        s.apply_into(&z, &powers[i as usize], scratch, &mut next)?;
        z = next;
    }
    Ok(z)
}

/// The pair `(S, T)` used for one degree of the kernel factor.
#[derive(Clone, Debug)]
pub struct LimRandSketch {
    pub t: SrhtSketch,
    pub s: TensorSrhtSketch,
}

impl LimRandSketch {
    /// `T: R^d → R^m` (the unsampled transform once `m` reaches the padded
    /// dimension) and `S` with output `m` over factors long enough for both.
    pub fn new(d: usize, m: usize, seed_t: u64, seed_s: u64) -> Result<Self> {
        let t = if m >= crate::linalg::next_pow2(d) {
            SrhtSketch::full(d, seed_t)?
        } else {
            SrhtSketch::new(d, m, seed_t)?
        };
        let s = TensorSrhtSketch::new(t.output_dim().max(m), m, seed_s)?;
        Ok(Self { t, s })
    }

    pub fn output_dim(&self, p: usize) -> usize {
        if p == 1 {
            self.t.output_dim()
        } else {
            self.s.output_dim()
        }
    }
}
