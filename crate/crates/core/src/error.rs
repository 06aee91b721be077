use std::path::PathBuf;

use crate::llm::LlmError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: malformed record: {message}")]
    MalformedLine {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("duplicate doc_id {0:?} at line {1}")]
    DuplicateDocId(String, usize),

    #[error("sentence entity references unknown document {0:?}")]
    UnknownDocId(String),

    #[error("entity {doc_id}#{sent_id} has offsets {start}..{end} outside its document")]
    BadOffsets {
        doc_id: String,
        sent_id: usize,
        start: usize,
        end: usize,
    },

    #[error("metadata store line {line}: {message}")]
    StoreCorrupt { line: usize, message: String },

    #[error("invalid word list: {0}")]
    InvalidWordList(String),

    #[error("invalid attribute spec: {0}")]
    InvalidAttribute(String),

    #[error("invalid score model: {0}")]
    InvalidScoreModel(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("word list generation failed for group {group:?}: every run failed")]
    GenerationFailed { group: String },

    #[error("probe failed: {failed} of {total} requests failed")]
    ProbeFailed { failed: usize, total: usize },

    #[error("pipeline stage {stage} failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Llm(#[from] LlmError),

    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
