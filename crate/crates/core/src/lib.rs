//! Randomized solvers for matrix power regression and attention kernel regression.
//!
//! The crate solves three families of least-squares problems with
//! sketch-and-precondition gradient descent:
//!
//! * even powers, `min ‖(AᵀA)ʲx − b‖₂` ([`power::even_powers`]),
//! * odd powers, `min ‖A(AᵀA)ʲx − b‖₂` ([`power::odd_powers`]),
//! * attention kernels, `min ‖exp(AAᵀ)x − b‖₂` ([`kernel::attention_kernel_regression`]).
//!
//! Randomness comes from subsampled randomized Hadamard transforms ([`sketch`]).
//! Every randomized routine is a pure function of its inputs and a 64-bit seed.
//! The [`oracle`] module holds dense reference computations used to check the
//! error guarantees.

pub mod error;
pub mod io;
pub mod kernel;
pub mod linalg;
pub mod oracle;
pub mod power;
pub mod rng;
pub mod sketch;
pub mod solvers;

pub use error::{Error, Result};

/// Dense real matrix. Storage is column-major; files on disk are row-major (see [`io`]).
pub type DenseMatrix = nalgebra::DMatrix<f64>;
/// Dense real column vector.
pub type Vector = nalgebra::DVector<f64>;
