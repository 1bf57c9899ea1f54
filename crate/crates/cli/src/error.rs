use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error at {path}: {message}")]
    Config { path: String, message: String },

    #[error(transparent)]
    Core(#[from] bethe_core::Error),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl CliError {
    pub fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        CliError::Config { path: path.into(), message: message.into() }
    }

    /// 2 for bad input, 3 for numeric failures, 1 for I/O.
    pub fn exit_code(&self) -> u8 {
        use bethe_core::Error as E;
        match self {
            CliError::Config { .. } => 2,
            CliError::Core(E::InvalidArgument(_) | E::SizeLimit { .. }) => 2,
            CliError::Core(_) => 3,
            CliError::Io { .. } | CliError::Csv(_) => 1,
        }
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        assert_eq!(CliError::config("j", "empty").exit_code(), 2);
        assert_eq!(CliError::from(bethe_core::Error::InvalidArgument("x".into())).exit_code(), 2);
        assert_eq!(CliError::from(bethe_core::Error::NumericFailure("x".into())).exit_code(), 3);
        assert_eq!(CliError::from(bethe_core::Error::TrackingFailure { lost: 1, total: 2 }).exit_code(), 3);
    }
}
