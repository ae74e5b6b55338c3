use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument is outside its documented domain.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// An instance violates one of its structural invariants.
    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("{n} qubits is too large for {what} (limit {limit})")]
    TooLarge {
        n: usize,
        limit: usize,
        what: &'static str,
    },

    #[error("length mismatch: expected {expected}, got {found}")]
    LengthMismatch { expected: usize, found: usize },

    /// The exact minimum energy is zero, so `<E>/E_exact` is undefined.
    #[error("exact minimum energy is zero; the energy ratio is undefined")]
    ZeroGroundEnergy,

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("malformed document: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}
