use std::path::PathBuf;

use thiserror::Error;

/// Errors surfaced by the simulator, oracle and experiment harness.
#[derive(Debug, Error)]
pub enum Error {
    /// A caller broke an operation's precondition (bad index, length mismatch, empty input).
    #[error("contract violation: {0}")]
    Contract(String),

    /// A numeric argument is outside the domain of a formula.
    #[error("domain error: {0}")]
    Domain(String),

    /// Invalid configuration, rejected before any work is done.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// The requested enumeration would exceed the configured entry cap.
    #[error("payoff tensor would need {needed} entries, cap is {cap}")]
    Resource { needed: u128, cap: u128 },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
