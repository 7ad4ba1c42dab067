use thiserror::Error;

/// Errors raised by grid construction, solvers and diagnostics.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("symmetry order {k} does not divide n_phi/2 = {half}")]
    SymmetryMisaligned { k: usize, half: usize },
    #[error("arc set not aligned with the phi grid: {0}")]
    ArcMisaligned(String),
    #[error("singular operator: {0}")]
    Singular(String),
    #[error("no convergence after {iterations} iterations (last change {last_change:e})")]
    NoConvergence { iterations: usize, last_change: f64 },
    #[error("degenerate state at r = {radius}: H = {h:e}")]
    Degenerate { radius: f64, h: f64 },
    #[error("radius {radius} outside the resolved range [{lo}, {hi}]")]
    OutOfRange { radius: f64, lo: f64, hi: f64 },
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("property violated: {0}")]
    PropertyViolation(String),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("io error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
