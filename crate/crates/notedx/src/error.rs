//! Crate-wide error type.
//!
//! Every error carries a stable machine-parsable code (see [`Error::code`])
//! which the CLI prints as `error[CODE]: message` on a single line.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("config: {0}")]
    Config(String),
    #[error("empty corpus")]
    EmptyCorpus,
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("unsupported format version {found} (expected {expected})")]
    Version { expected: u32, found: u32 },
    #[error("truncated file: {0}")]
    Truncated(String),
    #[error("corrupt file: {0}")]
    Corrupt(String),
    #[error("unknown label {0:?}")]
    UnknownLabel(String),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("stage {stage} failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    /// Stable one-token code for scripting against CLI output.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Io(_) => "E_IO",
            Error::Json(_) => "E_JSON",
            Error::Config(_) => "E_CONFIG",
            Error::EmptyCorpus => "E_EMPTY_CORPUS",
            Error::Shape(_) => "E_SHAPE",
            Error::InvalidArgument(_) => "E_INVALID_ARGUMENT",
            Error::Version { .. } => "E_VERSION",
            Error::Truncated(_) => "E_TRUNCATED",
            Error::Corrupt(_) => "E_CORRUPT",
            Error::UnknownLabel(_) => "E_UNKNOWN_LABEL",
            Error::InsufficientData(_) => "E_INSUFFICIENT_DATA",
            Error::Stage { .. } => "E_STAGE",
        }
    }

    pub(crate) fn in_stage(self, stage: &'static str) -> Error {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn codes_are_stable() {
        assert_eq!(Error::EmptyCorpus.code(), "E_EMPTY_CORPUS");
        assert_eq!(
            Error::Version {
                expected: 1,
                found: 2
            }
            .code(),
            "E_VERSION"
        );
        let wrapped = Error::EmptyCorpus.in_stage("preprocess");
        assert_eq!(wrapped.code(), "E_STAGE");
        assert!(wrapped.to_string().contains("preprocess"));
    }
}
