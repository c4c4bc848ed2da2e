use std::path::PathBuf;

use negf_core::NegfError;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid config field `{field}`: {message}")]
    Config { field: String, message: String },
    #[error("cannot read config {path}: {message}")]
    ConfigRead { path: PathBuf, message: String },
    #[error("unknown pipeline `{0}`")]
    UnknownPipeline(String),
    #[error(transparent)]
    Core(#[from] NegfError),
    #[error("writing {path}: {source}")]
    Output {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Self::Config {
            field: field.into(),
            message: message.into(),
        }
    }

    /// 2 for bad input, 3 for an oversized Fock space, 4 for a numerical failure, 5 for output IO.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config { .. } | Self::ConfigRead { .. } | Self::UnknownPipeline(_) => 2,
            Self::Core(e) => match e {
                NegfError::FockCap { .. } => 3,
                NegfError::Numerical { .. } | NegfError::GridMismatch(_) => 4,
                NegfError::InvalidModel(_)
                | NegfError::Dimension { .. }
                | NegfError::NotHermitian(_)
                | NegfError::Precondition(_) => 2,
            },
            Self::Output { .. } => 5,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
