//! Dense matrix/vector arithmetic with reverse-mode automatic
//! differentiation, sized for training the embedding model, plus a
//! finite-difference gradient checker.
//!
//! Everything is 64-bit: the model is tiny and gradient checking at 1e-4
//! relative tolerance is unreliable in 32-bit. The tape is dynamic and
//! rebuilt per training step because neighbor sampling changes the compute
//! graph topology each step.

mod gradcheck;
mod tape;
mod tensor;

pub use gradcheck::{finite_difference_check, GradCheckReport};
pub use tape::Tape;
pub use tensor::Tensor;

use thiserror::Error;

/// Norms below this are treated as zero in cosine similarity; the value and
/// its gradient are defined as 0 in that regime.
pub const COSINE_NORM_EPS: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum KernelError {
    #[error("{op}: shape mismatch, lhs {lhs:?} vs rhs {rhs:?}")]
    ShapeMismatch {
        op: &'static str,
        lhs: (usize, usize),
        rhs: (usize, usize),
    },
    #[error("{op}: produced a non-finite value")]
    NonFiniteValue { op: &'static str },
    #[error("{op}: empty input")]
    EmptyInput { op: &'static str },
    #[error("{op}: expected a vector, got {shape:?}")]
    NotAVector {
        op: &'static str,
        shape: (usize, usize),
    },
    #[error("backward: loss must be a 1x1 scalar, got {0:?}")]
    NonScalarLoss((usize, usize)),
    #[error("nll: class index {class} out of range for {len} classes")]
    ClassOutOfRange { class: usize, len: usize },
    #[error("row: index {index} out of range for {rows} rows")]
    RowOutOfRange { index: usize, rows: usize },
    #[error("finite_difference_check: epsilon {0} outside [1e-7, 1e-3]")]
    EpsilonOutOfRange(f64),
    #[error("finite_difference_check: objective is not deterministic ({0} vs {1} at the same point)")]
    NonDeterministicFunction(f64, f64),
}
