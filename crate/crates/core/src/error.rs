use thiserror::Error;

/// Errors raised by state construction, map application and the verification
/// harnesses.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("norm {kind:?} is not defined for {state} states")]
    IncompatibleNorm { kind: crate::spaces::NormKind, state: &'static str },

    #[error("state kind mismatch: map expects {expected}, got {got}")]
    StateMismatch { expected: &'static str, got: &'static str },

    #[error("sequence overflow: nonzero entry at the last index {index} of a length-{len} truncation")]
    Overflow { index: usize, len: usize },

    #[error("support [{lo}, {hi}] reaches the window boundary [{window_lo}, {window_hi}]")]
    WindowBoundary { lo: f64, hi: f64, window_lo: f64, window_hi: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("non-finite value at index {0}")]
    NonFinite(usize),

    #[error("initial data is not in the monotone cone: {0}")]
    NotMonotone(String),

    #[error("x0 = {0} lies outside [-1, 0]")]
    OutOfRange(f64),

    #[error("integral of alpha(s)/s diverges")]
    Divergent,

    #[error("no invariant-cone profile exists: integral of alpha(s)/s diverges")]
    NoSolution,

    #[error("quadrature verdict ambiguous after {depth} dyadic blocks (last ratio {ratio})")]
    Ambiguous { depth: usize, ratio: f64 },

    #[error("no spectral value reaches the threshold rho = {rho} (spectral radius {radius})")]
    EmptyUnstable { rho: f64, radius: f64 },

    #[error("zero norm at index {0} inside the fit window")]
    ZeroNorm(usize),

    #[error("operation requires a {expected} map, got {got}")]
    WrongMap { expected: &'static str, got: String },

    #[error("internal consistency check failed: {0}")]
    Internal(String),

    #[error("i/o: {0}")]
    Io(String),

    #[error("parse: {0}")]
    Parse(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
