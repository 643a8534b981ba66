use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("dimension mismatch: expected {expected}, got {found} ({context})")]
    Dimension {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("root finder did not converge for J_{order}, root {index}: last bracket [{lo}, {hi}]")]
    RootNotConverged {
        order: f64,
        index: usize,
        lo: f64,
        hi: f64,
    },

    #[error("covariance matrix for k = {k} is not positive definite (smallest eigenvalue {min_eigenvalue:e})")]
    NotPositiveDefinite { k: usize, min_eigenvalue: f64 },

    #[error("tridiagonal dominance violated at k = {k}: |off-diagonal| {off:e} >= diagonal {diag:e}")]
    DominanceViolated { k: usize, diag: f64, off: f64 },

    #[error("singular system at k = {k} (condition estimate {condition:e})")]
    Singular { k: usize, condition: f64 },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Process exit code: 1 for numerical failures, 2 for I/O and configuration problems.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io(_) | Error::Csv(_) | Error::Config(_) => 2,
            _ => 1,
        }
    }

    pub(crate) fn dim(context: &'static str, expected: usize, found: usize) -> Self {
        Error::Dimension {
            context,
            expected,
            found,
        }
    }
}
