use std::path::PathBuf;

/// Errors surfaced by the command-line front-end.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{file}: row {row}, column {column}: {message}")]
    Parse {
        file: PathBuf,
        /// 1-based data row; the header line is not counted.
        row: usize,
        column: String,
        message: String,
    },
    #[error("{file}: {message}")]
    Input { file: PathBuf, message: String },
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Model(#[from] pcma_core::Error),
    #[error("{0} of {1} fitted components did not converge")]
    NotConverged(usize, usize),
    #[error("cannot write {file}: {source}")]
    Write {
        file: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::NotConverged(..) => 3,
            CliError::Write { .. } => 1,
            _ => 2,
        }
    }

    pub(crate) fn input(file: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        CliError::Input {
            file: file.into(),
            message: message.into(),
        }
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;
