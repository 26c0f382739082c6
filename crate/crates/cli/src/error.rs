use std::path::PathBuf;

use tdm_core::TdmError;

use crate::config::ConfigError;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),

    /// A factorization or eigensolver failure, or a broken monotonicity
    /// guarantee detected after the fact.
    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    /// 0 success, 1 output I/O, 2 config, 3 numerical, 4 infeasible.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io { .. } => 1,
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Infeasible(_) => 4,
        }
    }
}

impl From<TdmError> for CliError {
    fn from(e: TdmError) -> Self {
        match e {
            TdmError::Factorization(_) | TdmError::Eigensolver(_) => CliError::Numerical(e.to_string()),
            TdmError::InvalidSelection(_) => CliError::Infeasible(e.to_string()),
            TdmError::Io(source) => CliError::Io {
                path: PathBuf::new(),
                source,
            },
            other => CliError::Config(ConfigError {
                path: String::new(),
                line: None,
                column: None,
                message: other.to_string(),
            }),
        }
    }
}
