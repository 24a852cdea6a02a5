//! Error type shared by every module of the crate.

use thiserror::Error;

/// Failures reported by the library.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    /// An argument is outside its documented domain.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A linear system does not have exactly one solution.
    #[error("no unique solution: rank {rank} of {cols} columns")]
    NoUniqueSolution { rank: usize, cols: usize },

    /// A full-rank system whose right-hand side is outside the column space.
    #[error("inconsistent linear system")]
    Inconsistent,

    /// The incremental solver was asked for a solution before reaching full rank.
    #[error("solver not ready: rank {rank} of {cols}")]
    NotReady { rank: usize, cols: usize },

    /// A receiver could not reach full rank on its decoding system.
    #[error("decode failure at receiver(s) {receivers:?}, rank deficit {deficit:?}")]
    DecodeFailure { receivers: Vec<u8>, deficit: Vec<usize> },

    /// A transmitter read channel state that its CSIT view does not grant.
    #[error("access violation: Tx{tx} read link ({from},{to}) outside view {view}")]
    AccessViolation {
        tx: u8,
        from: u8,
        to: u8,
        view: String,
    },

    /// A query that would reveal the current or a future instant.
    #[error("delayed feed queried at t={t} for instant {instant}")]
    NotYetObserved { t: usize, instant: usize },

    /// Invalid experiment configuration (scheme, view, sizes).
    #[error("configuration error: {0}")]
    Config(String),

    /// File or stream failure while writing results.
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

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
