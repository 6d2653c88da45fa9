use std::path::PathBuf;

use kernel_rv::dsl::DslError;
use kernel_rv::Error as CoreError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{file}:{line}: {message}")]
    Parse {
        file: PathBuf,
        line: usize,
        message: String,
    },
    #[error("{file}: {rows} rows, need at least {required}")]
    TooFewRows {
        file: PathBuf,
        rows: usize,
        required: usize,
    },
    #[error("metadata mismatch: {0}")]
    Metadata(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("pair `{id}`: {source}")]
    Pair { id: String, source: CoreError },
    #[error("invalid input: {0}")]
    Input(String),
    #[error("{0}")]
    Expression(#[from] DslError),
    #[error("{0}")]
    Core(#[from] CoreError),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    /// 2 for bad input, 3 for numerical failures.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(e) | CliError::Pair { source: e, .. } => core_exit_code(e),
            CliError::Expression(DslError::Eval { source, .. }) => core_exit_code(source),
            _ => 2,
        }
    }
}

fn core_exit_code(e: &CoreError) -> u8 {
    match e {
        CoreError::NoDistinctPairs
        | CoreError::NegativeDistance(_)
        | CoreError::Domain { .. }
        | CoreError::DegenerateNormalizer(_)
        | CoreError::SingularSystem
        | CoreError::RankDeficient { .. }
        | CoreError::DegenerateBandwidth(_) => 3,
        _ => 2,
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
