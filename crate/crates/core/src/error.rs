use thiserror::Error;

#[derive(Debug, Error)]
pub enum DdError {
    #[error("spin quantum number {0} is not a positive half-integer")]
    InvalidSpin(f64),

    #[error("site index {index} out of range for {sites} sites")]
    SiteOutOfRange { index: usize, sites: usize },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("{what}: dimension {dim} exceeds the limit of {limit}")]
    TooLarge {
        what: &'static str,
        dim: usize,
        limit: usize,
    },

    #[error("state norm {0} deviates from 1")]
    NotNormalized(f64),

    #[error("rotation axis has zero length")]
    ZeroAxis,

    #[error("squeezing target {target} unreachable; minimum achievable xi^2 is {minimum}")]
    SqueezingUnreachable { target: f64, minimum: f64 },

    #[error("Chebyshev expansion did not converge within {terms} terms")]
    ChebyshevNotConverged { terms: usize },

    #[error("norm drifted by {drift:e} during propagation")]
    NormDrift { drift: f64 },

    #[error("noise realization covers [0, {covered}] but the sequence needs {needed}")]
    NoiseTooShort { covered: f64, needed: f64 },

    #[error("model requires a noise realization")]
    MissingNoise,

    #[error("time grids differ between trajectories")]
    GridMismatch,

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("pulse budget mismatch for {protocol}: expected {expected}, got {actual}")]
    PulseBudget {
        protocol: String,
        expected: usize,
        actual: usize,
    },

    #[error("config error: {0}")]
    Config(String),

    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, DdError>;
