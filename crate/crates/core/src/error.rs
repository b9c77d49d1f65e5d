use thiserror::Error;

/// Errors raised by the numerical modules and the batch runner.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("resolution too coarse: {what} = {value} is below the guard {guard}")]
    ResolutionTooCoarse {
        what: &'static str,
        value: f64,
        guard: f64,
    },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("tail vanishes on the tested range (z = {z}); not distance-like there")]
    ZeroTail { z: f64 },

    #[error("function has zero L1 norm")]
    ZeroFunction,

    #[error("system is not mixing on the tested family: {0}")]
    NotMixing(String),

    #[error("orbit length {requested} exceeds the precision cap {cap}")]
    PrecisionCap { requested: u64, cap: u64 },

    #[error("grid of resolution {n} is not invariant under the map: {reason}")]
    IncompatibleGrid { n: usize, reason: String },

    #[error("zero denominator: {0}")]
    ZeroDenominator(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("experiment assertion failed: {0}")]
    Assertion(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Process exit code for the batch runner.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 2,
            Error::Assertion(_) => 4,
            Error::Io(_) | Error::Csv(_) => 1,
            _ => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
