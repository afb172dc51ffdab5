use thiserror::Error;

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    pub const RUNTIME: i32 = 1;
    pub const USAGE: i32 = 2;
    pub const DIMENSION: i32 = 3;
    pub const CAPACITY: i32 = 4;
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),

    #[error("{path}: {message}")]
    Parse { path: String, message: String },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("capacity exceeded: {0}")]
    Capacity(String),

    #[error("{0}")]
    Runtime(String),

    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Usage(_) | Self::Parse { .. } => exit::USAGE,
            Self::Dimension(_) => exit::DIMENSION,
            Self::Capacity(_) => exit::CAPACITY,
            Self::Runtime(_) | Self::Io { .. } => exit::RUNTIME,
        }
    }
}

impl From<qcert::Error> for CliError {
    fn from(e: qcert::Error) -> Self {
        match e {
            qcert::Error::DimensionMismatch { .. } => Self::Dimension(e.to_string()),
            qcert::Error::Capacity { .. } => Self::Capacity(e.to_string()),
            qcert::Error::InvalidArgument(m) => Self::Usage(m),
            other => Self::Runtime(other.to_string()),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
