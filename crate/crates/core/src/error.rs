use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument or parameter violates a documented invariant.
    #[error("domain error: {0}")]
    Domain(String),

    /// A linear system could not be solved (e.g. repeated reflection rates).
    #[error("singular system: {0}")]
    Singular(String),

    /// A Hestenes reflection left the interval the density is known on.
    #[error("extension out of reach: x = {x} reflects to {reflected}, outside [{lo}, {hi}]")]
    OutOfReach {
        x: f64,
        reflected: f64,
        lo: f64,
        hi: f64,
    },

    /// A brute-force oracle could not reach its accuracy target.
    #[error("accuracy not met: estimated error {achieved:e} exceeds target {target:e}")]
    AccuracyNotMet { achieved: f64, target: f64 },

    #[error("unsupported: {0}")]
    Unsupported(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
