//! Error types shared across the library.

use thiserror::Error;

/// Convenience alias used by every fallible operation in this crate.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A scenario violates a structural invariant (empty trajectory,
    /// non-uniform timestep, negative speed, ...).
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    /// A trajectory never approaches the conflict point closely enough
    /// to define a meaningful distance-to-conflict.
    #[error("no conflict: {0}")]
    NoConflict(String),

    /// Malformed input data; `location` names the offending file/row/column.
    #[error("parse error at {location}: {message}")]
    ParseError { location: String, message: String },

    /// A caller-supplied argument is outside its documented domain.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A game definition is unusable (empty payoff matrix, eigenfunction
    /// with non-zero empty-coalition value, ...).
    #[error("invalid game: {0}")]
    InvalidGame(String),

    /// Linear algebra broke down: singular system, non-PSD covariance,
    /// non-finite values.
    #[error("numerical error: {0}")]
    NumericalError(String),

    /// Two sequences cannot be aligned (incompatible timesteps or lengths).
    #[error("alignment error: {0}")]
    AlignmentError(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Exit code the command-line tool maps this error to.
    ///
    /// 2 = input/validation problems, 3 = numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::NumericalError(_) => 3,
            _ => 2,
        }
    }
}
