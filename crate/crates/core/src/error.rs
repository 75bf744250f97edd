use thiserror::Error;

/// Crate-wide error type.
///
/// Errors are split into two broad classes so callers (notably the CLI) can
/// distinguish bad inputs from numerical failures: [`ErrorClass::Input`] and
/// [`ErrorClass::Numerical`].
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("matrix not positive definite (leading minor {leading_minor})")]
    NotPositiveDefinite { leading_minor: usize },

    #[error("non-finite value in {context}")]
    NonFinite { context: String },

    #[error("did not converge: {0}")]
    NoConvergence(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    /// Bad data, bad configuration, unparseable files.
    Input,
    /// Factorization failures, divergence, non-finite evaluations.
    Numerical,
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::InvalidInput(_) | Error::Parse { .. } | Error::Io(_) | Error::Json(_)
            | Error::Csv(_) => ErrorClass::Input,
            Error::NotPositiveDefinite { .. } | Error::NonFinite { .. }
            | Error::NoConvergence(_) => ErrorClass::Numerical,
        }
    }

    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub fn non_finite(context: impl Into<String>) -> Self {
        Error::NonFinite {
            context: context.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
