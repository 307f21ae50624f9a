use std::path::PathBuf;

/// Errors produced by the channel models, solvers and the sweep harness.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// An argument fell outside the domain where a formula is defined.
    #[error("domain error: {0}")]
    Domain(String),

    /// A caller broke a documented precondition (malformed pairing, missing
    /// serviceable user, non-square matrix, ...).
    #[error("contract violation: {0}")]
    Contract(String),

    /// The exhaustive oracle refuses instances it cannot enumerate.
    #[error("exhaustive search supports at most {max} pairs, got {pairs}")]
    TooLarge { pairs: usize, max: usize },

    /// Invalid configuration file or sweep parameters.
    #[error("configuration error: {0}")]
    Config(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}

pub(crate) fn contract(msg: impl Into<String>) -> Error {
    Error::Contract(msg.into())
}
