use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors produced by the workbench core.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("duplicate document id: {0}")]
    DuplicateDocId(String),

    #[error("empty corpus: no documents were read")]
    EmptyCorpus,

    #[error("{path}:{line}: {reason}")]
    Malformed {
        path: PathBuf,
        line: usize,
        reason: String,
    },

    #[error("not a TREC SGML file (no <DOC> record found): {0}")]
    NotTrecSgml(PathBuf),

    #[error("query {0} analyzes to an empty term list")]
    EmptyQuery(String),

    #[error("query {0} has no entry in the qrels")]
    UnknownQuery(String),

    #[error("query {0} has no relevant documents in the qrels")]
    NoRelevantDocs(String),

    #[error("no ranked list available for query {0}")]
    MissingRun(String),

    #[error("document {doc_id} in the ranked list for query {qid} is not in the index")]
    UnknownDoc { qid: String, doc_id: String },

    #[error("relevance model estimation requires at least one feedback document")]
    EmptyFeedbackSet,

    #[error("invalid configuration:\n  - {}", .0.join("\n  - "))]
    InvalidConfig(Vec<String>),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("failed to parse {path}: {source}")]
    Json {
        path: PathBuf,
        source: serde_json::Error,
    },
}
