use std::path::PathBuf;

use thiserror::Error;

/// Every failure the toolkit can report. The variant is the error category
/// surfaced by the CLI.
#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch in {op}: {detail}")]
    Shape { op: &'static str, detail: String },

    #[error("matrix is singular: pivot {pivot:e} below {threshold:e}")]
    Singular { pivot: f64, threshold: f64 },

    #[error("matrix is not symmetric: max asymmetry {asymmetry:e}")]
    NotSymmetric { asymmetry: f64 },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("invalid parameter `{name}`: {reason}")]
    Parameter { name: &'static str, reason: String },

    #[error("format error in {path}: field `{field}`: {reason}")]
    Format {
        path: String,
        field: &'static str,
        reason: String,
    },

    #[error("configuration error: `{field}`: {reason}")]
    Config { field: String, reason: String },

    #[error("degenerate context: {0}")]
    DegenerateContext(String),

    #[error("training diverged: {0}")]
    Divergence(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn shape(op: &'static str, detail: impl Into<String>) -> Self {
        Error::Shape {
            op,
            detail: detail.into(),
        }
    }

    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::Parameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Short machine-readable category name.
    pub fn category(&self) -> &'static str {
        match self {
            Error::Shape { .. } => "shape",
            Error::Singular { .. } => "singular",
            Error::NotSymmetric { .. } => "contract",
            Error::NonFinite(_) => "non-finite",
            Error::Parameter { .. } => "parameter",
            Error::Format { .. } => "format",
            Error::Config { .. } => "config",
            Error::DegenerateContext(_) => "degenerate-context",
            Error::Divergence(_) => "divergence",
            Error::Io { .. } => "io",
        }
    }

    /// Process exit code for this category; 0 is reserved for success.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config { .. } | Error::Parameter { .. } => 2,
            Error::Io { .. } | Error::Format { .. } => 3,
            Error::Divergence(_) => 4,
            Error::Shape { .. }
            | Error::Singular { .. }
            | Error::NotSymmetric { .. }
            | Error::NonFinite(_)
            | Error::DegenerateContext(_) => 5,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
