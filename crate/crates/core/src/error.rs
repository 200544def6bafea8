use thiserror::Error;

/// Errors produced by the detection library and the experiment harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("unsupported QAM order {0}: expected one of 4, 16, 64, 256")]
    UnsupportedOrder(usize),

    #[error("invalid constellation: {0}")]
    InvalidConstellation(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("phase-error variance is zero; the Tikhonov metric is undefined (use the Euclidean metric)")]
    DegenerateVariance,

    #[error("no detector metric is finite for observation r = {r}")]
    NonFiniteMetrics { r: String },

    #[error("degenerate symbol pair ({i}, {j}): pairwise statistic variance {var} is not positive")]
    DegeneratePair { i: usize, j: usize, var: f64 },

    #[error("quadrature did not converge: log-likelihood of symbol {symbol} moved by {delta:e} when doubling {n_points} nodes")]
    QuadratureNotConverged { symbol: usize, n_points: usize, delta: f64 },

    #[error("forward-backward messages underflowed at position {position}")]
    MessageUnderflow { position: usize },

    #[error("length mismatch: {what} has {got} entries, expected {expected}")]
    LengthMismatch { what: &'static str, got: usize, expected: usize },

    #[error("tracker failure at symbol {index}: {source}")]
    Tracker {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("invalid configuration:\n  - {}", .0.join("\n  - "))]
    Config(Vec<String>),

    #[error("parse error at line {line}: {reason}")]
    Parse { line: usize, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Toml(#[from] toml::de::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
