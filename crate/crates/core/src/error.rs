use thiserror::Error;

/// Coarse failure class, used by the CLI to pick an exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Category {
    Config,
    Quadrature,
    Eigensolver,
}

impl Category {
    pub fn as_str(self) -> &'static str {
        match self {
            Category::Config => "config",
            Category::Quadrature => "quadrature",
            Category::Eigensolver => "eigensolver",
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("could not parse config: {0}")]
    Parse(String),
    #[error("invalid `{key}`: {reason}")]
    Invalid { key: String, reason: String },
    #[error("{0} is outside its domain")]
    Domain(String),
    #[error("quadrature did not converge: {0}")]
    Quadrature(String),
    #[error("drift matrix is defective: {0}")]
    Defective(String),
}

impl Error {
    pub fn invalid(key: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Invalid {
            key: key.into(),
            reason: reason.into(),
        }
    }

    pub fn category(&self) -> Category {
        match self {
            Error::Parse(_) | Error::Invalid { .. } | Error::Domain(_) => Category::Config,
            Error::Quadrature(_) => Category::Quadrature,
            Error::Defective(_) => Category::Eigensolver,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
