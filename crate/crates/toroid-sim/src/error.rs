use thiserror::Error;

/// Crate-wide error type. Variants map onto CLI exit codes.
#[derive(Debug, Error)]
pub enum Error {
    /// Invalid or inconsistent configuration (exit code 2).
    #[error("config error: {0}")]
    Config(String),

    /// Input outside an operation's domain (exit code 2).
    #[error("domain error: {0}")]
    Domain(String),

    /// A numerical procedure failed to converge or produced garbage (exit code 3).
    #[error("numeric failure: {0}")]
    Numeric(String),

    /// A Monte-Carlo target could not be reached within the attempt budget
    /// (exit code 4). Carries the partial statistics.
    #[error("target unreachable: triggered {triggered} of {target} after {attempts} attempts \
             (prefilter passed {prefiltered}, gate rejected {gate_rejected})")]
    TargetUnreachable {
        target: usize,
        triggered: usize,
        attempts: u64,
        prefiltered: u64,
        gate_rejected: u64,
    },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Serde(String),
}

impl Error {
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Domain(_) => 2,
            Error::Numeric(_) => 3,
            Error::TargetUnreachable { .. } => 4,
            Error::Io(_) | Error::Serde(_) => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
