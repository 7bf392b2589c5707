//! Small dense complex linear algebra: matrices, LU solves, eigenvalues and
//! singular values. Sized for impurity matrices of a few dozen rows.

mod eigen;
mod lstsq;
mod lu;
mod matrix;
mod svd;

pub use eigen::{eigenvalues, spectral_radius, MAX_EIGEN_DIM};
pub use lstsq::least_squares;
pub use lu::{solve, PIVOT_TOL};
pub use matrix::{mat_mul, mat_power, CMatrix};
pub use svd::{null_space_dimension, singular_values};

/// Failures of the dense linear algebra layer.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LinalgError {
    #[error("matrix shape {rows}x{cols} has no entries")]
    EmptyShape { rows: usize, cols: usize },
    #[error("expected {expected} entries, found {found}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },
    #[error("{op}: incompatible shapes {left:?} and {right:?}")]
    DimensionMismatch {
        op: &'static str,
        left: (usize, usize),
        right: (usize, usize),
    },
    #[error("matrix is {rows}x{cols}, expected square")]
    NotSquare { rows: usize, cols: usize },
    #[error("singular matrix: pivot {pivot:e} at step {step} below threshold {threshold:e}")]
    Singular {
        step: usize,
        pivot: f64,
        threshold: f64,
    },
    #[error("no convergence after {iterations} iterations")]
    NoConvergence { iterations: usize },
    #[error("dimension {dim} exceeds supported maximum {max}")]
    TooLarge { dim: usize, max: usize },
}
