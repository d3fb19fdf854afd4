use thiserror::Error;

/// Errors raised by the OCS library.
#[derive(Debug, Error)]
pub enum OcsError {
    /// Shape mismatch between related inputs (e.g. schedule length vs horizon).
    #[error("structural error: {0}")]
    Structural(String),
    /// Malformed or non-finite input data.
    #[error("data error: {0}")]
    Data(String),
    /// Argument outside a function's mathematical domain.
    #[error("domain error: {0}")]
    Domain(String),
    /// Problem parameters (L, U, beta, epsilon, ...) outside their admissible range.
    #[error("parameter error: {0}")]
    Parameter(String),
    /// Value outside the range of an invertible map.
    #[error("range error: {0}")]
    Range(String),
    #[error("infeasible: {0}")]
    Infeasible(String),
    /// Request exceeds a documented size bound.
    #[error("refused: {0}")]
    Refused(String),
    /// Advice or manifest failed validation before execution.
    #[error("validation error: {0}")]
    Validation(String),
    #[error("solver error: {0}")]
    Solver(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = OcsError> = std::result::Result<T, E>;
