use thiserror::Error;

/// Errors raised by the toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("invalid distortion measure: {0}")]
    InvalidDistortion(String),

    #[error("invalid source model: {0}")]
    InvalidModel(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("empty input: {0}")]
    Empty(String),

    #[error("distortion level {d} is at or below d_min = {d_min} (infeasible-low)")]
    InfeasibleLow { d: f64, d_min: f64 },

    #[error("degenerate distortion: d_min = d_av = {0}")]
    Degenerate(f64),

    #[error("lambda must be <= 0, got {0}")]
    PositiveLambda(f64),

    #[error("distortion measure has no value grid; use the Monte Carlo estimator")]
    NoValueGrid,

    #[error("instance too large: {0}")]
    TooLarge(String),

    #[error("markov chain is not ergodic: {0}")]
    NonErgodic(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("bitstream error: {0}")]
    Bitstream(String),

    #[error("codec spec mismatch: expected checksum {expected:#010x}, found {found:#010x}")]
    SpecMismatch { expected: u32, found: u32 },

    #[error("fallback quantizer cannot reach distortion {0}")]
    FallbackInfeasible(f64),

    #[error("conditioned sampler acceptance rate {rate:e} below 1e-6 after {attempts} draws")]
    RejectionStalled { rate: f64, attempts: u64 },

    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

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
