use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config key {key}: {reason}")]
    Config { key: String, reason: String },
    #[error("{source}; last good snapshot: {}", last_good.as_ref().map(|p| p.display().to_string()).unwrap_or_else(|| "none".into()))]
    Blowup { source: sqglab_core::Error, last_good: Option<PathBuf> },
    #[error(transparent)]
    Core(#[from] sqglab_core::Error),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{0}")]
    Input(String),
}

impl CliError {
    pub fn config(key: &str, reason: impl Into<String>) -> Self {
        Self::Config { key: key.to_string(), reason: reason.into() }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io { path: path.into(), source }
    }

    /// 2 for bad configuration or violated hypotheses, 3 for blow-up.
    pub fn exit_code(&self) -> u8 {
        use sqglab_core::Error as E;
        match self {
            CliError::Config { .. } => 2,
            CliError::Core(E::Param { .. } | E::Hypothesis { .. } | E::Grid(_)) => 2,
            CliError::Blowup { .. } | CliError::Core(E::Blowup { .. }) => 3,
            _ => 1,
        }
    }
}

/// Tags a core blow-up with the last snapshot known to be good.
pub fn with_last_good(e: sqglab_core::Error, last_good: Option<PathBuf>) -> CliError {
    match e {
        sqglab_core::Error::Blowup { .. } => CliError::Blowup { source: e, last_good },
        other => CliError::Core(other),
    }
}
