use thiserror::Error;

#[derive(Debug, Error)]
pub enum LabError {
    #[error("{origin}:{line}:{col}: {message}")]
    Parse { origin: String, line: usize, col: usize, message: String },
    #[error("{0}")]
    Config(String),
    #[error("scenario `{scenario}`: {message}")]
    Scenario { scenario: String, message: String },
    #[error("{0}")]
    Io(String),
}

impl LabError {
    /// 2 for unusable input, 1 for failures while running.
    pub fn exit_code(&self) -> u8 {
        match self {
            LabError::Parse { .. } | LabError::Config(_) => 2,
            LabError::Scenario { .. } | LabError::Io(_) => 1,
        }
    }
}
