use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("operator is not Hermitian (deviation {deviation:e})")]
    NotHermitian { deviation: f64 },

    #[error("invalid quantum state: {0}")]
    InvalidState(String),

    #[error("{name} = {value} is out of its domain: {reason}")]
    Domain {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("time {t} µs lies outside the protocol window [0, {tau}] µs")]
    TimeOutOfRange { t: f64, tau: f64 },

    #[error("measurement outcome x = {x} has vanishing probability under the current state")]
    Underflow { x: f64 },

    #[error("integrator failure at step {step}: {reason}")]
    Integrator { step: usize, reason: String },

    #[error("grid mismatch: {0}")]
    Grid(String),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("configuration field `{field}`: {reason}")]
    Config { field: String, reason: String },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}: {source}", path.display())]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("{}: malformed record: {reason}", path.display())]
    Parse { path: PathBuf, reason: String },

    #[error("trajectory {index} (master seed {seed}) failed: {source}")]
    Worker {
        index: u64,
        seed: u64,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            reason: reason.into(),
        }
    }
}
