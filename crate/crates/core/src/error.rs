use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum VqecError {
    #[error("capacity exceeded: {what} = {value}, limit {limit}")]
    Capacity {
        what: &'static str,
        value: usize,
        limit: usize,
    },

    #[error("qubit index {qubit} out of range for a {n}-qubit register (indices are 1-based)")]
    QubitIndex { qubit: usize, n: usize },

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("dimension mismatch: expected {expected}, got {got} ({context})")]
    Dimension {
        expected: usize,
        got: usize,
        context: &'static str,
    },

    #[error("assumption violated: {0}")]
    Assumption(String),

    #[error("non-finite value at iteration {iteration}: {what}")]
    NonFinite { iteration: usize, what: String },
}

pub type Result<T> = std::result::Result<T, VqecError>;

pub(crate) fn arg_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(VqecError::Argument(msg.into()))
}

pub(crate) fn check_dim(expected: usize, got: usize, context: &'static str) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(VqecError::Dimension {
            expected,
            got,
            context,
        })
    }
}
