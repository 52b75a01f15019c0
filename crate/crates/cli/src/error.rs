use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// A bad or missing configuration value, named by its dotted key.
    #[error("config error at `{key}`: {message}")]
    Config { key: String, message: String },
    #[error("io error: {0}")]
    Io(String),
    #[error(transparent)]
    Library(#[from] stochflow::Error),
}

impl CliError {
    /// Process exit code for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. } | CliError::Io(_) | CliError::Library(stochflow::Error::Config(_)) => 2,
            CliError::Library(_) => 1,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
