use thiserror::Error;

use crate::he::BackendKind;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("message out of range: {0}")]
    MessageOutOfRange(String),

    #[error("non-integer message or constant on the exact-additive backend: {0}")]
    NonInteger(String),

    #[error("backend mismatch: expected {expected}, found {found}")]
    BackendMismatch { expected: BackendKind, found: BackendKind },

    #[error("invalid ciphertext: {0}")]
    InvalidCiphertext(String),

    #[error("scale mismatch: {left} vs {right}")]
    ScaleMismatch { left: String, right: String },

    #[error("plaintext budget overflow: {0}")]
    BudgetOverflow(String),

    #[error("capacity exceeded: {0}")]
    Capacity(String),

    #[error("precision overflow: {digits} fractional digits, at most {max} allowed")]
    Precision { digits: usize, max: usize },

    #[error("malformed decimal {0:?}")]
    Malformed(String),

    #[error("fractional base {0} does not divide a power of ten")]
    IncompatibleBase(u32),

    #[error("pool level {level} out of range 0..={max}")]
    LevelOutOfRange { level: usize, max: usize },

    #[error("coefficient {coefficient} out of range for pool with maximum {max}")]
    CoefficientOutOfRange { coefficient: i64, max: u32 },

    #[error("unsupported capability: {0}")]
    Capability(String),

    #[error("serialization: {0}")]
    Serialization(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
