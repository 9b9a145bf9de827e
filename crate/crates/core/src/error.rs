use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Errors raised across the pipeline.
///
/// [`Error::exit_code`] maps each variant onto the CLI contract: data
/// problems exit with 1, estimation problems with 2.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{file}: row {row}: {message}")]
    Parse {
        file: String,
        row: usize,
        message: String,
    },

    #[error("{file}: missing column `{column}`")]
    Schema { file: String, column: String },

    #[error("unknown firm id `{0}`")]
    UnknownFirm(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("coverage error: {0}")]
    Coverage(String),

    #[error("structural error: {0}")]
    Structural(String),

    #[error("usage error: {0}")]
    Usage(String),

    #[error("parameter error: {0}")]
    Parameter(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("convention error: {0}")]
    Convention(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("estimation error: {message} (deviance trace: {trace:?})")]
    Estimation { message: String, trace: Vec<f64> },

    #[error("empty model: {0}")]
    EmptyModel(String),

    #[error("invalid regression: {0}")]
    Spec(String),

    #[error("inference error: {0}")]
    Inference(String),

    #[error("prediction error: {0}")]
    Prediction(String),

    #[error("normalization error: {0}")]
    Normalization(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn parse(file: impl Into<String>, row: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            file: file.into(),
            row,
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit status for this error class.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Estimation { .. }
            | Error::EmptyModel(_)
            | Error::Spec(_)
            | Error::Inference(_)
            | Error::Prediction(_)
            | Error::Normalization(_) => 2,
            _ => 1,
        }
    }
}
