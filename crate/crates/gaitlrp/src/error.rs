use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("age {0} outside the labeled range [20, 79]")]
    OutOfRangeAge(i64),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("curve has fewer than 2 samples")]
    DegenerateCurve,

    #[error("subject selection is empty")]
    EmptySelection,

    #[error("class {class} has {have} subjects, need at least {need} for {need}-fold split")]
    InsufficientSubjects {
        class: String,
        have: usize,
        need: usize,
    },

    #[error("shape mismatch at layer {layer}: {msg}")]
    Shape { layer: usize, msg: String },

    #[error("training diverged at epoch {epoch}: loss is not finite")]
    Divergence { epoch: usize },

    #[error("class {0} missing from relevance profiles")]
    MissingClass(String),

    #[error("confusion matrix is empty")]
    EmptyMatrix,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("fold {fold}: {source}")]
    Fold {
        fold: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code for the CLI: 2 = bad input, 3 = divergence, 1 = anything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Divergence { .. } => 3,
            Error::Fold { source, .. } => source.exit_code(),
            Error::Io(_) => 1,
            _ => 2,
        }
    }
}
