use std::path::PathBuf;

use destflow_core::network::Violation;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{file}:{line}: {msg}")]
    Parse { file: String, line: usize, msg: String },
    #[error("invalid network:{}", list(.0))]
    Network(Vec<Violation>),
    #[error("{0}")]
    Scenario(String),
    #[error(transparent)]
    Model(#[from] destflow_core::Error),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

fn list(v: &[Violation]) -> String {
    v.iter().map(|x| format!("\n  {x}")).collect()
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }

    /// Process exit code for this error category.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse { .. } => 3,
            CliError::Network(_) => 4,
            CliError::Scenario(_) => 4,
            CliError::Model(e) => match e {
                destflow_core::Error::InvalidNetwork(_)
                | destflow_core::Error::Grid(_)
                | destflow_core::Error::Cfl { .. }
                | destflow_core::Error::Scenario(_) => 4,
                _ => 5,
            },
            CliError::Io { .. } => 6,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
