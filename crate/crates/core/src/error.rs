use thiserror::Error;

/// Errors raised by the geometry, quadrature and report routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("point {point:?} lies outside the domain ({domain})")]
    Domain { point: Vec<f64>, domain: String },

    #[error("radius {radius} is outside the admissible range: {reason}")]
    Radius { radius: f64, reason: String },

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("infeasible radial profile at r = {radius}: y = {y} leaves [-1, 0)")]
    InfeasibleProfile { radius: f64, y: f64 },

    #[error("level set is singular at {points} node(s), first at {first:?} (|Df| = {grad_norm:e})")]
    SingularLevelSet {
        points: usize,
        first: Vec<f64>,
        grad_norm: f64,
    },

    #[error("hypothesis violated: {0}")]
    Hypothesis(String),

    #[error("surface is not mean convex: H = {value:e} at {point:?}")]
    MeanConvexity { point: Vec<f64>, value: f64 },

    #[error("no convergence: {0}")]
    Convergence(String),

    #[error("unknown graph id `{0}`")]
    UnknownGraph(String),

    #[error("parse error: {0}")]
    Parse(String),

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
        Error::Parse(e.to_string())
    }
}

pub(crate) fn ensure_finite(what: &str, values: impl IntoIterator<Item = f64>) -> Result<()> {
    if values.into_iter().all(f64::is_finite) {
        Ok(())
    } else {
        Err(Error::NonFinite(what.to_string()))
    }
}
