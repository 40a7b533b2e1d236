use thiserror::Error;

#[derive(Debug, Error)]
pub enum LabError {
    /// Bad configuration or arguments; exit code 2.
    #[error("invalid configuration at {path}: {message}")]
    Validation { path: String, message: String },
    /// A stage failed inside the numerical core.
    #[error("{stage}: {source}")]
    Core {
        stage: &'static str,
        #[source]
        source: commutant_core::Error,
    },
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Format(String),
}

impl LabError {
    pub fn core(stage: &'static str) -> impl FnOnce(commutant_core::Error) -> LabError {
        move |source| LabError::Core { stage, source }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            LabError::Validation { .. } => 2,
            _ => 1,
        }
    }
}
