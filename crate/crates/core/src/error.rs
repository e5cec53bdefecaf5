use thiserror::Error;

/// Errors raised by the library.
///
/// Variants are split between input problems (bad files, inconsistent
/// dimensions) and numerical outcomes (infeasible LPs, stalled optimizers);
/// [`Error::is_input_error`] tells them apart for exit-code purposes.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("empty support: {0}")]
    EmptySupport(String),
    #[error("infeasible: {0}")]
    Infeasible(String),
    #[error("unbounded: {0}")]
    Unbounded(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn is_input_error(&self) -> bool {
        matches!(self, Error::Dimension(_) | Error::Parse(_) | Error::Invalid(_) | Error::Io { .. })
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Error::Dimension(_) => "dimension",
            Error::Parse(_) => "parse",
            Error::Invalid(_) => "invalid",
            Error::EmptySupport(_) => "empty_support",
            Error::Infeasible(_) => "infeasible",
            Error::Unbounded(_) => "unbounded",
            Error::Numerical(_) => "numerical",
            Error::Io { .. } => "io",
        }
    }

    pub(crate) fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
