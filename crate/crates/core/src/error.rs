use std::io;

use thiserror::Error;

/// Errors produced anywhere in the library.
#[derive(Debug, Error)]
pub enum KgError {
    /// A configuration value violates an invariant. `key` is the dotted
    /// config path (or a descriptive name when not parsed from a file).
    #[error("invalid configuration `{key}`: {reason}")]
    Config { key: String, reason: String },

    /// The mass is not strictly positive, so D = iH has a nontrivial kernel.
    #[error("mass must be > 0 for D to be invertible (got m = {mass})")]
    NotInvertible { mass: f64 },

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("leapfrog step dt = {dt} violates the stability bound dt < 2*hbar/E_max = {bound}")]
    Unstable { dt: f64, bound: f64 },

    #[error("non-finite field value at t = {t}")]
    Blowup { t: f64 },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("snapshot: {0}")]
    Snapshot(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl KgError {
    pub(crate) fn config(key: impl Into<String>, reason: impl Into<String>) -> Self {
        KgError::Config {
            key: key.into(),
            reason: reason.into(),
        }
    }
}

pub type Result<T, E = KgError> = std::result::Result<T, E>;
