use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid space: {0}")]
    InvalidSpace(String),

    #[error("vertex set is empty")]
    EmptySet,

    #[error("length mismatch: expected {expected} values, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("non-finite value at vertex {0}")]
    NonFinite(usize),

    #[error("exponent p = {0} must be greater than 1")]
    InvalidExponent(f64),

    #[error(
        "infeasible obstacle problem: lower obstacle exceeds upper obstacle at vertices {0:?}"
    )]
    Infeasible(Vec<usize>),

    #[error("solver stopped after {iterations} iterations with KKT residual {kkt:.3e}")]
    NotConverged { iterations: usize, kkt: f64 },

    #[error("{0}")]
    NotSubset(String),

    #[error("vertex sets {0} overlap")]
    Overlap(String),

    #[error("free problem: {0}")]
    FreeProblem(String),

    #[error("ball B(x, {radius}) around vertex {center} escapes the space")]
    BallEscapes { center: usize, radius: f64 },

    #[error("parameter constraint violated: {0}")]
    Constraint(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Stable snake-case tag for machine-readable error records.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidSpace(_) => "invalid_space",
            Error::EmptySet => "empty_set",
            Error::LengthMismatch { .. } => "length_mismatch",
            Error::NonFinite(_) => "non_finite",
            Error::InvalidExponent(_) => "invalid_exponent",
            Error::Infeasible(_) => "infeasible",
            Error::NotConverged { .. } => "not_converged",
            Error::NotSubset(_) => "not_subset",
            Error::Overlap(_) => "overlap",
            Error::FreeProblem(_) => "free_problem",
            Error::BallEscapes { .. } => "ball_escapes",
            Error::Constraint(_) => "constraint",
            Error::Config(_) => "config",
            Error::Io(_) => "io",
            Error::Csv(_) => "csv",
        }
    }
}
