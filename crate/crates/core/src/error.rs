use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid feasible set: {0}")]
    InvalidSet(String),

    #[error("ball-cap search failed after {iterations} bisection steps (residual {residual:e})")]
    CapSearch { residual: f64, iterations: usize },

    #[error("p-norm mirror map requires p >= 2, got {0}")]
    InvalidNormExponent(f64),

    #[error("invalid problem specification: {0}")]
    InvalidProblem(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("starting point is infeasible (violation {violation:e})")]
    InfeasibleStart { violation: f64 },

    #[error("operation not supported: {0}")]
    Unsupported(String),

    #[error("only {admitted} points admitted, at least {required} required")]
    TooFewPoints { admitted: usize, required: usize },

    #[error("ERM inner solver stopped at gap {gap:e} > tolerance {tolerance:e} after {iterations} iterations")]
    ErmTolerance {
        gap: f64,
        tolerance: f64,
        iterations: usize,
    },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("rate fit needs at least {required} usable sample sizes, found {found}")]
    RateFit { found: usize, required: usize },

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}
