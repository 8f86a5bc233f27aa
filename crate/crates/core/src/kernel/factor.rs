use super::lim_rand::{lim_rand_with, LimRandSketch};
use super::ln_factorial;
use crate::error::check_unit_interval;
use crate::linalg::{mat_t_vec, mat_vec};
use crate::rng::{derive_seed, label};
use crate::sketch::{Sketch, TensorScratch};
use crate::{DenseMatrix, Error, Result};
use rayon::prelude::*;
use serde::Serialize;

/// Constants of the kernel factor and of the kernel solver.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct KernelConfig {
    /// `q = ⌈c_q·(r² + ln(n/ε))⌉`.
    pub c_q: f64,
    /// `m_l = ⌈c_m·β_l·l²/ε²⌉` rows for degree `l`.
    pub c_m: f64,
    /// Upper limit on `m_l`.
    pub max_block_rows: usize,
    /// Rank bound used for every degree instead of `min(n, C(d+l−1, l))`.
    pub beta_hint: Option<usize>,
    /// Accept rows of norm above 1.
    pub allow_large_radius: bool,
    /// Distortion the inner sketch of the solver is sized for.
    pub eps0: f64,
    /// Forces the inner sketch to this many sampled rows.
    pub inner_rows: Option<usize>,
    pub embedding_constant: f64,
    /// Refine the dense-branch solution against the exact kernel.
    pub refine: bool,
    pub max_refinements: usize,
    pub max_iterations: Option<usize>,
    pub stall_window: usize,
}

impl Default for KernelConfig {
    fn default() -> Self {
        Self {
            c_q: 2.0,
            c_m: 4.0,
            max_block_rows: 4096,
            beta_hint: None,
            allow_large_radius: false,
            eps0: 0.01,
            inner_rows: None,
            embedding_constant: crate::sketch::DEFAULT_EMBEDDING_CONSTANT,
            refine: true,
            max_refinements: 100,
            max_iterations: None,
            stall_window: 20,
        }
    }
}

/// `W_g = [Z₀; Z₁/√1!; …; Z_q/√q!]`, each `Z_l` (`m_l × n`) a degree-`l`
/// tensor sketch of the points, stored already scaled.
#[derive(Clone, Debug)]
pub struct KernelFactor {
    blocks: Vec<DenseMatrix>,
    n: usize,
    radius: f64,
    beta: Vec<usize>,
    seed: u64,
}

/// Truncation degree `⌈c_q·(r² + ln(n/ε))⌉`, at least 1.
pub fn truncation_degree(n: usize, eps: f64, radius: f64, c_q: f64) -> usize {
    let q = (c_q * (radius * radius + (n as f64 / eps).ln())).ceil();
    (q as usize).max(1)
}

fn binomial_capped(top: usize, k: usize, cap: usize) -> usize {
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (top - i) as u128 / (i + 1) as u128;
        if acc >= cap as u128 {
            return cap;
        }
    }
    acc as usize
}

impl KernelFactor {
    /// A factor from explicit blocks; block `l` is taken as already scaled.
    pub fn from_blocks(blocks: Vec<DenseMatrix>) -> Result<Self> {
        let n = blocks.first().map(|b| b.ncols()).unwrap_or(0);
        if blocks.len() < 2 || n == 0 || blocks.iter().any(|b| b.ncols() != n) {
            return Err(Error::Dimension(
                "a kernel factor needs at least two blocks over the same n >= 1 points".into(),
            ));
        }
        let beta = blocks.iter().map(|b| b.nrows().min(n)).collect();
        Ok(Self {
            blocks,
            n,
            radius: f64::NAN,
            beta,
            seed: 0,
        })
    }

    pub fn blocks(&self) -> &[DenseMatrix] {
        &self.blocks
    }

    /// Truncation degree.
    pub fn q(&self) -> usize {
        self.blocks.len() - 1
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Total rows `m = Σ m_l`.
    pub fn rows(&self) -> usize {
        self.blocks.iter().map(|b| b.nrows()).sum()
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn beta(&self) -> &[usize] {
        &self.beta
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// `W_g·v` for `v ∈ Rⁿ`.
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        self.blocks.iter().flat_map(|b| mat_vec(b, v)).collect()
    }

    /// `W_gᵀ·u` for `u ∈ Rᵐ`.
    pub fn apply_transpose(&self, u: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        let mut offset = 0;
        for b in &self.blocks {
            let part = mat_t_vec(b, &u[offset..offset + b.nrows()]);
            out.iter_mut().zip(&part).for_each(|(o, p)| *o += p);
            offset += b.nrows();
        }
        out
    }

    /// `W_gᵀ·W_g·v`.
    pub fn gram_apply(&self, v: &[f64]) -> Vec<f64> {
        self.apply_transpose(&self.apply(v))
    }

    /// Dense `W_gᵀ·W_g`.
    pub fn gram(&self) -> DenseMatrix {
        let mut g = DenseMatrix::zeros(self.n, self.n);
        for b in &self.blocks {
            g += b.transpose() * b;
        }
        g
    }

    /// Dense `W_g`.
    pub fn to_dense(&self) -> DenseMatrix {
        let mut w = DenseMatrix::zeros(self.rows(), self.n);
        let mut offset = 0;
        for b in &self.blocks {
            w.rows_mut(offset, b.nrows()).copy_from(b);
            offset += b.nrows();
        }
        w
    }
}

/// Builds `W_g` for the rows of `A` so that `W_gᵀW_g ≈ exp(A·Aᵀ)`.
///
/// Degree 0 is the all-ones row, degree 1 an SRHT of the points, and degree
/// `l ≥ 2` applies [`super::tensor_sketch_lim_rand`] with a sketch pair seeded
/// from `(seed, l)`.
pub fn build_kernel_factor(
    a: &DenseMatrix,
    eps: f64,
    delta: f64,
    seed: u64,
    config: &KernelConfig,
) -> Result<KernelFactor> {
    let (n, d) = a.shape();
    if n == 0 || d == 0 {
        return Err(Error::Dimension(format!("kernel data is {n}x{d}")));
    }
    check_unit_interval("eps", eps, 1.0)?;
    check_unit_interval("delta", delta, 1.0)?;
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::Parameter("kernel data has non-finite entries".into()));
    }
    let radius = a.row_iter().map(|r| r.norm()).fold(0.0, f64::max);
    if radius > 1.0 + 1e-12 && !config.allow_large_radius {
        return Err(Error::Radius { radius });
    }
    let q = truncation_degree(n, eps, radius, config.c_q);
    let at = a.transpose();
    let points: Vec<Vec<f64>> = (0..n).map(|i| at.column(i).iter().copied().collect()).collect();

    let mut blocks = vec![DenseMatrix::from_element(1, n, 1.0)];
    let mut beta = vec![1];
    for l in 1..=q {
        let beta_l = config
            .beta_hint
            .unwrap_or_else(|| binomial_capped(d + l - 1, l, n))
            .max(1);
        let rows = (config.c_m * (beta_l * l * l) as f64 / (eps * eps)).ceil();
        let m_l = (rows.min(config.max_block_rows as f64) as usize).max(1);
        let sketch = LimRandSketch::new(
            d,
            m_l,
            derive_seed(seed, label::BLOCK, 2 * l as u64),
            derive_seed(seed, label::BLOCK, 2 * l as u64 + 1),
        )?;
        let scale = (-0.5 * ln_factorial(l)).exp();
        let mut block = if l == 1 {
            sketch.t.apply(&at)?
        } else {
            degree_block(&points, l, &sketch)?
        };
        block *= scale;
        debug_assert_eq!(block.nrows(), sketch.output_dim(l));
        blocks.push(block);
        beta.push(beta_l);
    }
    Ok(KernelFactor {
        blocks,
        n,
        radius,
        beta,
        seed,
    })
}

fn degree_block(points: &[Vec<f64>], l: usize, sketch: &LimRandSketch) -> Result<DenseMatrix> {
    let m = sketch.s.output_dim();
    let columns: Vec<Vec<f64>> = points
        .par_iter()
        .map_init(
            || TensorScratch::new(sketch.s.factor_dim()),
            |scratch, x| lim_rand_with(x, l, &sketch.s, &sketch.t, scratch),
        )
        .collect::<Result<_>>()?;
    let mut block = DenseMatrix::zeros(m, points.len());
    for (j, col) in columns.iter().enumerate() {
        block.column_mut(j).copy_from_slice(col);
    }
    Ok(block)
}
