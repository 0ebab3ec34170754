use thiserror::Error;

/// Errors shared by every module of the workbench.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("arity error: {0}")]
    Arity(String),

    #[error("parse error at position {position}: {message}")]
    Parse { position: usize, message: String },

    #[error("unsupported parameter: {0}")]
    UnsupportedParameter(String),

    #[error("cap exceeded: {0}")]
    CapExceeded(String),

    #[error("not found: {0}")]
    NotFound(String),

    #[error("exact computation too large: ball has {size} elements, threshold is {threshold}")]
    ExactTooLarge { size: usize, threshold: usize },

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("unsatisfiable: {0}")]
    Unsatisfiable(String),

    #[error("internal invariant violated: {0}")]
    Internal(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub fn parse(position: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            position,
            message: message.into(),
        }
    }

    /// Short machine-readable tag used in CLI error reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Arity(_) => "arity",
            Error::Parse { .. } => "parse",
            Error::UnsupportedParameter(_) => "unsupported_parameter",
            Error::CapExceeded(_) => "cap_exceeded",
            Error::NotFound(_) => "not_found",
            Error::ExactTooLarge { .. } => "exact_too_large",
            Error::NumericalFailure(_) => "numerical_failure",
            Error::Domain(_) => "domain",
            Error::Unsatisfiable(_) => "unsatisfiable",
            Error::Internal(_) => "internal",
            Error::Io(_) => "io",
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
