use thiserror::Error;

use crate::lti::IndexSet;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("non-finite entry in {0}")]
    NonFinite(&'static str),

    #[error("index {index} out of range for universe of size {universe}")]
    IndexOutOfRange { index: usize, universe: usize },

    #[error("model assumption violated: {0}")]
    ModelAssumption(String),

    /// The system is not sparse strongly observable at the requested bounds.
    /// Carries the first failing subsystem (attacked inputs, trusted outputs).
    #[error("system is not sparse strongly observable; failing subsystem inputs {gamma_u}, outputs {gamma_y}")]
    NotSparseStronglyObservable { gamma_u: IndexSet, gamma_y: IndexSet },

    /// Every attack hypothesis was refuted.
    #[error("no attack hypothesis is consistent with the window (smallest residual {residual_floor:e}, tolerance {epsilon:e})")]
    Infeasible { residual_floor: f64, epsilon: f64 },

    #[error("iteration cap of {0} reached without a consistent hypothesis")]
    IterationCap(u64),

    #[error("generation failed: {0}")]
    GenerationFailure(String),
}
