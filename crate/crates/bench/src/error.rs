use thiserror::Error;

pub type Result<T, E = BenchError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error(transparent)]
    Core(#[from] streche_core::Error),

    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },

    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error("invalid workload: {0}")]
    InvalidSpec(String),

    #[error("invalid benchmark options: {0}")]
    InvalidOptions(String),

    #[error("{strategy} failed verification for plaintext {plaintext}: decrypted {decrypted}")]
    Verification { strategy: String, plaintext: String, decrypted: String },

    #[error("{strategy} cannot encrypt {value}: {reason}")]
    Unsupported { strategy: String, value: String, reason: String },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}
