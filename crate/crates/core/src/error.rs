use thiserror::Error;

#[derive(Error, Debug)]
pub enum Error {
    #[error("invalid path: {0}")]
    InvalidPath(String),
    #[error("invalid measure: {0}")]
    InvalidMeasure(String),
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("measure path is not monotone: first violation at time index {k}, columns ({j}, {j2})")]
    NonMonotonePath { k: usize, j: usize, j2: usize },
    #[error("certification failed: {0}")]
    Certification(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
