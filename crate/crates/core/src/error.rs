use thiserror::Error;

/// Errors produced by the simulation, mitigation and optimization routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// The caller supplied arguments that violate an operation's contract.
    #[error("usage error: {0}")]
    Usage(String),

    /// Register larger than the dense simulator supports.
    #[error("capacity error: {n_qubits} qubits requested, at most {max} supported")]
    Capacity { n_qubits: usize, max: usize },

    /// A model description violates a physical or structural constraint.
    #[error("validation error [{code}]: {message}")]
    Validation { code: String, message: String },

    /// Parameter values hit a pole or leave the domain of a formula.
    #[error("domain error: {0}")]
    Domain(String),

    /// An integration or linear solve did not meet its tolerance.
    #[error("numerical failure: {message} (achieved tolerance {achieved:e})")]
    Numerical { message: String, achieved: f64 },

    /// The optimizer received a NaN or infinite objective value.
    #[error("objective returned a non-finite value at iteration {iteration}")]
    NonFiniteObjective { iteration: usize },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn usage(msg: impl Into<String>) -> Self {
        Error::Usage(msg.into())
    }

    pub(crate) fn validation(code: &str, msg: impl Into<String>) -> Self {
        Error::Validation {
            code: code.to_string(),
            message: msg.into(),
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
