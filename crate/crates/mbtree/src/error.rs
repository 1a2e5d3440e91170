use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid node reference {0}")]
    InvalidNode(usize),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("parameter out of domain: {0}")]
    Domain(String),
    #[error("unsupported size: {0}")]
    UnsupportedSize(String),
    #[error("unknown model: {0}")]
    UnknownModel(String),
    #[error("numeric failure: {0}")]
    Numeric(String),
    #[error("capacity exceeded: {0}")]
    Capacity(String),
}

impl Error {
    /// Stable process exit code for each error family.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Parse(_) => 2,
            Error::UnknownModel(_) => 3,
            Error::Domain(_) => 4,
            Error::UnsupportedSize(_) => 5,
            Error::InvalidNode(_) => 6,
            Error::Numeric(_) => 7,
            Error::Capacity(_) => 8,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidNode(_) => "invalid_node",
            Error::Parse(_) => "parse",
            Error::Domain(_) => "domain",
            Error::UnsupportedSize(_) => "unsupported_size",
            Error::UnknownModel(_) => "unknown_model",
            Error::Numeric(_) => "numeric",
            Error::Capacity(_) => "capacity",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
