use thiserror::Error;

/// Errors surfaced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    /// Invalid configuration value. The message names the offending key
    /// with a dotted path (e.g. `algorithm.compressor.k`).
    #[error("invalid configuration: {0}")]
    Config(String),

    /// The algorithm and problem cannot be combined (e.g. a method that
    /// needs a closed-form minimizer on a problem without one).
    #[error("incompatible run: {0}")]
    Incompatible(String),

    /// An algebraic runtime check failed. This indicates a bug, not bad input.
    #[error("invariant violated: {0}")]
    Invariant(String),

    /// Every cell of a parameter sweep diverged.
    #[error("no stable configuration: every sweep cell diverged")]
    NoStableConfiguration,

    #[error("dataset error: {0}")]
    Data(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
