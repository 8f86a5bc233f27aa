//! Seeded random transforms: the fast Walsh–Hadamard transform, the subsampled
//! randomized Hadamard transform (SRHT), its tensor variant, and statistical
//! checks of the embedding properties they are meant to have.

mod fwht;
mod srht;
mod stats;
mod tensor;

pub use fwht::{fwht, fwht_in_place, hadamard_entry};
pub use srht::{embedding_dim, SrhtSketch, DEFAULT_EMBEDDING_CONSTANT};
pub use stats::{check_embedding, check_famp, EmbeddingReport, FampReport, TrialDistortion};
pub use tensor::TensorSrhtSketch;
pub(crate) use tensor::TensorScratch;

use crate::{DenseMatrix, Result};

/// A linear map `Rⁿ → Rᵐ` that can be applied column-wise to a matrix.
pub trait Sketch {
    fn input_dim(&self) -> usize;
    fn output_dim(&self) -> usize;
    fn apply(&self, a: &DenseMatrix) -> Result<DenseMatrix>;
}
