//! Reverse-mode automatic differentiation over dense `f64` tensors.

pub mod gradcheck;
mod dft;
mod lines;
mod tape;
mod tensor;

pub use tape::{Gradients, ModeAxes, Tape, Var};
pub use tensor::Tensor;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AutodiffError {
    #[error("shape error: {0}")]
    Shape(String),
    #[error("non-finite values in {0}")]
    NonFinite(String),
    #[error("backward needs a scalar output, got shape {0:?}")]
    NotScalar(Vec<usize>),
    #[error("norm of the reference is zero")]
    ZeroNorm,
}
