//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Error, Debug)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("config error: {0}")]
    Config(String),

    /// A generation constraint (e.g. glyph distinctness) could not be met
    /// within its retry budget — the configuration is infeasible.
    #[error("infeasible config: {0}")]
    Infeasible(String),

    #[error("malformed {what}: {detail}")]
    Format { what: String, detail: String },

    /// Prototype bank does not cover the labels an operation needs.
    #[error("bank/label-set mismatch: {0}")]
    BankMismatch(String),

    /// A degenerate numeric situation the pipeline refuses to paper over.
    #[error("degenerate value: {0}")]
    Degenerate(String),

    #[error("enumeration budget exceeded: {0} cells (cap {1})")]
    EnumerationCap(u128, u128),

    #[error("{0}")]
    Invalid(String),
}

impl Error {
    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    pub fn format(what: impl Into<String>, detail: impl Into<String>) -> Self {
        Error::Format {
            what: what.into(),
            detail: detail.into(),
        }
    }
}
