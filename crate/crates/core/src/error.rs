use thiserror::Error;

/// Errors raised by the engine.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    /// A series or polynomial coefficient was requested beyond the order
    /// that the inputs can certify.
    #[error("insufficient precision: {0}")]
    Precision(String),
    /// An argument violates the precondition of the operation.
    #[error("invalid input: {0}")]
    InvalidInput(String),
    /// Input data failed validation.
    #[error("validation failed: {0}")]
    Validation(String),
    /// An operator computation left its truncation window.
    #[error("window overflow: {0}")]
    Window(String),
    /// Two computations that must agree did not.
    #[error("mismatch: {0}")]
    Mismatch(String),
}

pub type Result<T> = std::result::Result<T, Error>;
