use std::path::{Path, PathBuf};

/// Failures of the harness, grouped by process exit code.
#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("config: {0}")]
    Config(String),
    #[error("missing input {}: run `{producer}` first", path.display())]
    Missing { path: PathBuf, producer: &'static str },
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{}: {msg}", path.display())]
    Format { path: PathBuf, msg: String },
    #[error(transparent)]
    Numerics(#[from] cqdon_core::Error),
}

pub type Result<T> = std::result::Result<T, HarnessError>;

impl HarnessError {
    /// 2: bad configuration, 3: missing or unreadable artifacts, 4: numerical failure.
    pub fn exit_code(&self) -> i32 {
        use cqdon_core::Error as E;
        match self {
            HarnessError::Config(_) => 2,
            HarnessError::Missing { .. } | HarnessError::Io { .. } | HarnessError::Format { .. } => 3,
            HarnessError::Numerics(E::InvalidConfig(_) | E::OutOfRange { .. } | E::WindowTooLong { .. }) => 2,
            HarnessError::Numerics(_) => 4,
        }
    }

    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        HarnessError::Io { path: path.to_path_buf(), source }
    }

    pub(crate) fn format(path: &Path, msg: impl Into<String>) -> Self {
        HarnessError::Format { path: path.to_path_buf(), msg: msg.into() }
    }
}
