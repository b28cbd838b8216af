use std::fmt;

/// Failures of a bench run, split by exit code.
#[derive(Debug)]
pub enum BenchError {
    /// Invalid configuration, usage or output location (exit code 1).
    Config(String),
    /// A solver or linear system failed (exit code 2).
    Numerical(idiff::Error),
}

pub type BenchResult<T> = std::result::Result<T, BenchError>;

impl BenchError {
    pub fn exit_code(&self) -> i32 {
        match self {
            BenchError::Config(_) => 1,
            BenchError::Numerical(_) => 2,
        }
    }

    pub(crate) fn numerical(msg: impl Into<String>) -> Self {
        BenchError::Numerical(idiff::Error::Domain(msg.into()))
    }
}

impl fmt::Display for BenchError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BenchError::Config(msg) => write!(f, "configuration error: {msg}"),
            BenchError::Numerical(e) => write!(f, "numerical failure: {e}"),
        }
    }
}

impl std::error::Error for BenchError {}

impl From<idiff::Error> for BenchError {
    fn from(e: idiff::Error) -> Self {
        BenchError::Numerical(e)
    }
}

impl From<std::io::Error> for BenchError {
    fn from(e: std::io::Error) -> Self {
        BenchError::Config(format!("i/o: {e}"))
    }
}

impl From<csv::Error> for BenchError {
    fn from(e: csv::Error) -> Self {
        BenchError::Config(format!("csv: {e}"))
    }
}
