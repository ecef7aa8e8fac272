use std::fmt;
use std::process::ExitCode;

/// Command failure, split by exit code: configuration problems exit with 2, data and
/// I/O problems with 3.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Data(String),
}

pub type CliResult<T> = Result<T, CliError>;

impl CliError {
    pub fn config(msg: impl fmt::Display) -> Self {
        CliError::Config(msg.to_string())
    }

    pub fn data(msg: impl fmt::Display) -> Self {
        CliError::Data(msg.to_string())
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Data(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Data(m) => write!(f, "data error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<CliError> for ExitCode {
    fn from(e: CliError) -> Self {
        ExitCode::from(e.exit_code())
    }
}

/// Attaches context to core errors as data errors.
pub(crate) trait DataContext<T> {
    fn data_ctx(self, what: impl fmt::Display) -> CliResult<T>;
}

impl<T, E: fmt::Display> DataContext<T> for Result<T, E> {
    fn data_ctx(self, what: impl fmt::Display) -> CliResult<T> {
        self.map_err(|e| CliError::Data(format!("{what}: {e}")))
    }
}
