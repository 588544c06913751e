use thiserror::Error;

use crate::estimator::IterationRecord;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Error, Debug, Clone)]
pub enum Error {
    #[error("invalid knots: {0}")]
    InvalidKnots(String),

    #[error("{what} = {value} lies outside the domain [{lo}, {hi}]")]
    Domain {
        what: String,
        value: f64,
        lo: f64,
        hi: f64,
    },

    #[error("shape mismatch for {what}: expected {expected}, found {found}")]
    Shape {
        what: String,
        expected: usize,
        found: usize,
    },

    #[error("invalid shape parameter for {family}: {value} (must be > 0)")]
    InvalidShape { family: String, value: f64 },

    #[error("unknown link family '{0}' (expected extreme_value, logistic, pareto:<gamma> or probit)")]
    UnknownLink(String),

    #[error("degenerate data: {0}")]
    DegenerateData(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("no convergence after {iterations} iterations (|score|_inf = {grad_inf:.3e})")]
    NonConvergence {
        iterations: usize,
        grad_inf: f64,
        trace: Vec<IterationRecord>,
    },

    #[error("information matrix is singular beyond ridge escalation")]
    SingularInformation,

    #[error("knot selection failed: {0}")]
    KnotSelection(String),

    #[error("monte carlo harness failed: {0}")]
    Harness(String),

    /// Malformed input file; the message carries line and column.
    #[error("{0}")]
    Input(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl Error {
    pub(crate) fn domain(what: impl Into<String>, value: f64, lo: f64, hi: f64) -> Self {
        Error::Domain {
            what: what.into(),
            value,
            lo,
            hi,
        }
    }

    pub(crate) fn shape(what: impl Into<String>, expected: usize, found: usize) -> Self {
        Error::Shape {
            what: what.into(),
            expected,
            found,
        }
    }
}
