//! Positive maps on matrix algebras.
//!
//! The crate builds the reduction, Robertson and related maps as tables of
//! matrix-unit images, certifies their positivity through a block-matrix
//! theorem (and, independently, through eigenvalue oracles and a see-saw
//! falsifier), and analyses the associated entanglement witnesses: a PPT
//! state that detects them, zero-expectation product vectors for optimality,
//! and the partial-transpose covariance behind nd-optimality.

pub mod blockcert;
pub mod error;
pub mod format;
pub mod linalg;
pub mod maps;
pub mod pairs;
pub mod witness;

pub use error::{Error, Result};
