use thiserror::Error;

/// Errors surfaced by the command-line tool. Usage and configuration problems
/// exit with status 2, everything else with 1.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error at line {line}, column {column}: {msg}")]
    Config { line: usize, column: usize, msg: String },
    #[error("invalid configuration: {0}")]
    Invalid(String),
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] collarflow_core::Error),
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed file {path}: {msg}")]
    Format { path: String, msg: String },
}

impl CliError {
    pub fn invalid(msg: impl Into<String>) -> Self {
        CliError::Invalid(msg.into())
    }

    pub fn core(e: collarflow_core::Error) -> Self {
        CliError::Core(e)
    }

    pub fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        CliError::Io { path: path.display().to_string(), source }
    }

    pub fn format(path: &std::path::Path, msg: impl Into<String>) -> Self {
        CliError::Format { path: path.display().to_string(), msg: msg.into() }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. } | CliError::Invalid(_) | CliError::Usage(_) => 2,
            // A core configuration error from user input is still a usage error.
            CliError::Core(collarflow_core::Error::Config(_))
            | CliError::Core(collarflow_core::Error::Domain { .. })
            | CliError::Core(collarflow_core::Error::GridTooSmall { .. })
            | CliError::Core(collarflow_core::Error::Nyquist { .. }) => 2,
            CliError::Format { .. } => 2,
            _ => 1,
        }
    }
}
