use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    /// `message` already ends with the line and column.
    #[error("{source_name}: {message}")]
    Parse { source_name: String, line: usize, column: usize, message: String },
    #[error("schema error: {0}")]
    Schema(String),
    #[error(transparent)]
    Core(#[from] hardy_tree_core::Error),
    #[error("usage error: {0}")]
    Usage(String),
    #[error("assertion failed: {0}")]
    Assertion(String),
}

impl CliError {
    /// 1 for failed assertions, 2 for usage errors, 3 for bad input.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Assertion(_) => 1,
            CliError::Usage(_) => 2,
            CliError::Io { .. } | CliError::Parse { .. } | CliError::Schema(_) | CliError::Core(_) => 3,
        }
    }
}
