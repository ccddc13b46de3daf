use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum LabError {
    #[error("invalid config: {0}")]
    Config(String),
    #[error("unknown check `{0}`")]
    UnknownCheck(String),
    #[error("stage {0} has no record")]
    MissingStage(usize),
    #[error("malformed record {path}: {msg}")]
    Record { path: PathBuf, msg: String },
    #[error("stage {stage}: {source}")]
    Stage {
        stage: usize,
        #[source]
        source: abclab_core::error::Error,
    },
    #[error(transparent)]
    Core(#[from] abclab_core::error::Error),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("usage: {0}")]
    Usage(String),
}

impl LabError {
    /// 2 for usage errors, 1 for everything raised while computing.
    pub fn exit_code(&self) -> i32 {
        match self {
            LabError::Config(_) | LabError::UnknownCheck(_) | LabError::MissingStage(_) | LabError::Usage(_) => 2,
            _ => 1,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> LabError {
        let path = path.into();
        move |source| LabError::Io { path, source }
    }
}

pub type LabResult<T> = Result<T, LabError>;
