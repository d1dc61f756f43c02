use thiserror::Error;

/// Failure of a run, split by the exit status it maps to.
#[derive(Debug, Error)]
pub enum CliError {
    /// Invalid flags, config file, input data or output path.
    #[error("{0}")]
    Config(String),
    /// A numerical or I/O failure during the experiment.
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Runtime(_) => 3,
        }
    }
}

impl From<hetdet_core::Error> for CliError {
    fn from(e: hetdet_core::Error) -> Self {
        use hetdet_core::Error;
        match e {
            Error::Config(_) | Error::Parse { .. } => CliError::Config(e.to_string()),
            Error::Domain(_) | Error::Io(_) => CliError::Runtime(e.to_string()),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
