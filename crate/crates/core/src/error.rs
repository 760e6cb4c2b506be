use thiserror::Error;

/// Errors raised across the toolkit.
///
/// The variants follow the failure classes used throughout: argument outside
/// the mathematical domain, a violated precondition on an input object, a
/// configuration that cannot be honored, and an empirical check that found
/// no usable sample.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("contract violated: {0}")]
    Contract(String),

    #[error("configuration error: {0}")]
    Config(String),

    /// No sampled trajectory satisfied the certificate envelope.
    #[error("no covered trajectories ({covered} of {total}); certificate and envelope disagree")]
    NoCoverage { covered: usize, total: usize },

    /// A Sontag-type factorization was found but its slack exceeds the bound.
    #[error("factorization slack {slack:.4} exceeds bound {bound}")]
    SlackExceeded { slack: f64, bound: f64 },

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
