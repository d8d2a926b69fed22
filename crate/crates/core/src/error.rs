use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{source_name}:{line}: {message}")]
    Parse {
        source_name: String,
        line: usize,
        message: String,
    },
    #[error("{0}")]
    EmptyInput(String),
    #[error("invalid metric name `{0}`")]
    InvalidMetric(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("ungraded collection: no positive grade in the judgments")]
    UngradedCollection,
    #[error("{spec}: {source}")]
    Metric {
        spec: String,
        #[source]
        source: Box<Error>,
    },
    #[error("no topic shared between runs and judgments has a relevant document")]
    NoSharedTopics,
    #[error("empty table after cleaning")]
    EmptyTable,
    #[error("missing column `{0}`")]
    MissingColumn(String),
    #[error("length mismatch: {0} != {1}")]
    LengthMismatch(usize, usize),
    #[error("too few samples: need at least {needed}, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("constant input: {0}")]
    ConstantInput(&'static str),
    #[error("non-finite value: {0}")]
    NonFinite(String),
    #[error("invalid table: {0}")]
    InvalidTable(String),
    #[error("invalid split: {0}")]
    InvalidSplit(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
