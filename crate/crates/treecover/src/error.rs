use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("range error: {0}")]
    Range(String),
    #[error("argument error: {0}")]
    Argument(String),
    #[error("state error: {0}")]
    State(String),
    #[error("numeric error: {0}")]
    Numeric(String),
    #[error("unknown experiment `{0}`")]
    UnknownExperiment(String),
    #[error("unknown sampler `{0}`")]
    UnknownSampler(String),
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
