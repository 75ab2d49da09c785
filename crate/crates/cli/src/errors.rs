use thiserror::Error;

/// CLI-level error with a machine-readable exit code:
/// 2 input/schema, 3 numerical-invariant violation, 4 network.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),

    #[error("{0}")]
    Numerical(String),

    #[error("network error: {0}")]
    Network(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Core(#[from] tomnet_core::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        use tomnet_core::Error as Core;
        match self {
            CliError::Input(_) | CliError::Io(_) | CliError::Json(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Network(_) => 4,
            CliError::Core(e) => match e {
                Core::NoInferentialContent
                | Core::NonPositiveLikelihood { .. }
                | Core::InvalidAlpha(_)
                | Core::InvalidWeight { .. }
                | Core::NotNested { .. } => 3,
                _ => 2,
            },
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
