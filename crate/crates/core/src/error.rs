use std::io;

/// Errors produced by the library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A value or argument violates a documented invariant.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// An interval or index falls outside the sequence.
    #[error("out of range: {0}")]
    OutOfRange(String),

    /// An operation that needs a power-of-two horizon got something else.
    #[error("horizon {0} is not a power of two")]
    NotPowerOfTwo(usize),

    /// The requested size exceeds what an exhaustive routine will enumerate.
    #[error("{what}: length {len} exceeds the enumeration limit of {limit}")]
    TooLarge {
        what: &'static str,
        len: usize,
        limit: usize,
    },

    /// Text or CSV input could not be parsed.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    /// Bisection bracket does not straddle a sign change.
    #[error(
        "bracket [{lo}, {hi}] does not straddle zero (mean at lo = {mean_lo}, at hi = {mean_hi})"
    )]
    Bracket {
        lo: f64,
        hi: f64,
        mean_lo: f64,
        mean_hi: f64,
    },

    /// Configuration validation, reported all at once.
    #[error("invalid configuration:\n  {}", .0.join("\n  "))]
    Config(Vec<String>),

    /// Magnitude model misbehaved while sampling.
    #[error("magnitude model error: {0}")]
    Model(String),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Whether the error stems from bad user input rather than a runtime failure.
    pub fn is_validation(&self) -> bool {
        !matches!(self, Error::Io(_))
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
