use std::fmt;

/// Failure of a CLI command, classified by exit status.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(String),
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Data(_) => 3,
            CliError::Numerical(_) => 4,
        }
    }

    pub fn data(msg: impl Into<String>) -> Self {
        CliError::Data(msg.into())
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Data(m) => write!(f, "data error: {m}"),
            CliError::Numerical(m) => write!(f, "numerical error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<shapesearch::Error> for CliError {
    fn from(e: shapesearch::Error) -> Self {
        match e {
            shapesearch::Error::Numerical { .. } => CliError::Numerical(e.to_string()),
            other => CliError::Data(other.to_string()),
        }
    }
}

impl From<shapesearch::search::PartialRun> for CliError {
    fn from(e: shapesearch::search::PartialRun) -> Self {
        let msg = e.to_string();
        match e.error {
            shapesearch::Error::Numerical { .. } => CliError::Numerical(msg),
            _ => CliError::Data(msg),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Data(format!("JSON: {e}"))
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Data(format!("CSV: {e}"))
    }
}

pub type CliResult<T> = Result<T, CliError>;
