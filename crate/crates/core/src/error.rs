use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("input is not valid UTF-8")]
    NotUtf8,

    #[error("malformed record at line {line}: {message}")]
    Malformed { line: usize, message: String },

    #[error("missing field `{field}` at line {line}")]
    MissingField { field: String, line: usize },

    #[error("corpus has no non-empty documents")]
    EmptyCorpus,

    #[error("duplicate document id `{0}`")]
    DuplicateId(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("corpus too short: need at least {needed} tokens, found {found}")]
    TooShort { needed: usize, found: usize },

    #[error("need at least {needed} documents, found {found}")]
    TooFewDocuments { needed: usize, found: usize },

    #[error("tagger error: {0}")]
    Tagger(String),

    #[error("tag `{0}` is not in the Penn Treebank tagset")]
    UnknownTag(String),

    #[error("tagger returned {found} tags for {expected} tokens")]
    TagLengthMismatch { expected: usize, found: usize },

    #[error("document `{0}` has no part-of-speech tags")]
    Untagged(String),

    #[error("index built with tagger `{index}` but document tagged by `{document}`")]
    TaggerMismatch { index: String, document: String },

    #[error(transparent)]
    Embedding(#[from] EmbeddingError),

    #[error("system group is misaligned: {0}")]
    Misaligned(String),

    #[error("report `{report}` lacks metric `{metric}`")]
    MissingMetric { report: String, metric: String },

    #[error("compression failed: {0}")]
    Compression(String),
}

#[derive(Debug, thiserror::Error)]
pub enum EmbeddingError {
    #[error("embedding endpoint {endpoint} unreachable: {message}")]
    Unreachable { endpoint: String, message: String },

    #[error("embedding endpoint {endpoint} rejected credentials (HTTP {status})")]
    Auth { endpoint: String, status: u16 },

    #[error("embedding endpoint {endpoint} returned HTTP {status}")]
    Status { endpoint: String, status: u16 },

    #[error("embedding dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("malformed embedding response: {0}")]
    Protocol(String),
}
