use thiserror::Error;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error(transparent)]
    Core(#[from] pdm_core::Error),
    #[error("invalid scenario: {0}")]
    Scenario(String),
    #[error("report output failed: {0}")]
    Output(String),
}

pub type Result<T, E = BenchError> = std::result::Result<T, E>;
