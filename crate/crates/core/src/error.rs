use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch in {op}: {left:?} vs {right:?}")]
    Shape {
        op: &'static str,
        left: Vec<usize>,
        right: Vec<usize>,
    },
    #[error("invalid state: {0}")]
    State(String),
    #[error("contract violated: {0}")]
    Contract(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("label {label} out of range for {classes} classes")]
    Label { label: usize, classes: usize },
    #[error("degenerate class distribution: class {class} has no samples")]
    DegenerateClass { class: usize },
    #[error("parameter key mismatch: {0}")]
    Key(String),
    #[error("numeric failure: {0}")]
    Numeric(String),
    #[error("parse error at line {line}: {message}")]
    Parse { line: u64, message: String },
    #[error("validation failed: {0}")]
    Validation(String),
    #[error("out of range: {0}")]
    Range(String),
    #[error("unsupported or corrupt format: {0}")]
    Format(String),
    #[error("stratum error: {0}")]
    Stratum(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by bad user input rather than a failure while
    /// doing the work. The CLI maps these to exit code 1.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Config(_)
                | Error::Label { .. }
                | Error::DegenerateClass { .. }
                | Error::Parse { .. }
                | Error::Validation(_)
                | Error::Stratum(_)
                | Error::Contract(_)
        )
    }
}
