use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Input failed a domain check (ranges, dimensions, symmetry, ...).
    #[error("validation error: {0}")]
    Validation(String),

    /// Malformed row in an input file.
    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },

    /// An observed transition has zero probability under the model.
    #[error("impossible transition for risk {risk} at step {step}")]
    ImpossibleTransition { step: usize, risk: usize },

    /// Iterative method did not converge or left its feasible region.
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// The closed-form parameterization is outside its domain.
    #[error("parameterization error: {0}")]
    Parameterization(String),

    /// Input is valid but the requested quantity is undefined for it.
    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    /// Likelihood-ratio test requested for models that are not nested.
    #[error("models are not nested: {full} vs {restricted}")]
    NonNested { full: String, restricted: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Numerical(_)
            | Error::Parameterization(_)
            | Error::Degenerate(_)
            | Error::InsufficientData(_) => 3,
            _ => 2,
        }
    }
}
