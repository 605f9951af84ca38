use rsp_core::RspError;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("config {path}: {message}")]
    Config { path: String, message: String },
    #[error("{0}")]
    Core(#[from] RspError),
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
    #[error("validation failed for criteria {0:?}")]
    ValidationFailed(Vec<u8>),
}

impl CliError {
    /// 1 for failed checks and numerical breakdowns, 2 for bad input.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::ValidationFailed(_) => 1,
            CliError::Core(e) => match e {
                RspError::InvalidParameter { .. }
                | RspError::InvalidState(_)
                | RspError::NoClosedForm(_)
                | RspError::Unreachable { .. }
                | RspError::NoSignChange { .. } => 2,
                _ => 1,
            },
            CliError::Usage(_) | CliError::Config { .. } | CliError::Io { .. } => 2,
        }
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;
