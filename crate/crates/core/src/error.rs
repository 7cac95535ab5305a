use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Broad failure classes, used by front ends to pick exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Validation,
    Io,
    DataConsistency,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("format error: {0}")]
    Format(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("corrupt data at byte offset {offset}: {reason}")]
    Corrupt { offset: u64, reason: String },
    #[error("parse error at row {row}: {reason}")]
    Parse { row: usize, reason: String },
    #[error("empty input: {0}")]
    EmptyInput(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("inconsistent measure at node {node}: {reason}")]
    InconsistentMeasure { node: usize, reason: String },
    #[error("product formula constraint violated at node {node}: {reason}")]
    Constraint { node: usize, reason: String },
    #[error("index error: {0}")]
    Index(String),
    #[error("dimension error: {0}")]
    Dimension(String),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("configuration error: {0}")]
    Configuration(String),
    #[error("stratification error: class {class} has {count} members, fewer than {folds} folds")]
    Stratification { class: u32, count: usize, folds: usize },
    #[error("empty neighborhood around point {0}")]
    EmptyNeighborhood(usize),
    #[error("labeled data required: {0}")]
    LabelsRequired(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Io(_) => ErrorKind::Io,
            Error::Format(_)
            | Error::Corrupt { .. }
            | Error::Parse { .. }
            | Error::InconsistentMeasure { .. }
            | Error::Constraint { .. }
            | Error::Stratification { .. }
            | Error::EmptyNeighborhood(_)
            | Error::LabelsRequired(_)
            | Error::Json(_) => ErrorKind::DataConsistency,
            Error::Unsupported(_)
            | Error::EmptyInput(_)
            | Error::Domain(_)
            | Error::Index(_)
            | Error::Dimension(_)
            | Error::InsufficientData(_)
            | Error::Configuration(_) => ErrorKind::Validation,
        }
    }
}
