//! Command-line error type and its process exit-code mapping.

use std::path::PathBuf;

/// Errors surfaced by the command-line layer.
///
/// Every failure maps onto one of three scriptable exit codes:
/// configuration problems exit 2, data / file problems exit 3, and
/// estimation failures exit 4 (success is 0).
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Invalid configuration: bad config file contents, invalid parameter
    /// combinations, out-of-range addresses.
    #[error("config error: {0}")]
    Config(String),
    /// Invalid input data: unreadable or malformed frame files, mismatched
    /// frame shapes.
    #[error("data error: {0}")]
    Data(String),
    /// The estimation pipeline itself failed (degenerate signals, internal
    /// failure).
    #[error("estimation error: {0}")]
    Estimation(String),
    /// An OS-level I/O failure, annotated with the path involved.
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl CliError {
    pub fn config(msg: impl Into<String>) -> Self {
        CliError::Config(msg.into())
    }

    pub fn data(msg: impl Into<String>) -> Self {
        CliError::Data(msg.into())
    }

    pub fn estimation(msg: impl Into<String>) -> Self {
        CliError::Estimation(msg.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code for this error: 2 config, 3 data, 4 estimation.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Data(_) | CliError::Io { .. } => 3,
            CliError::Estimation(_) => 4,
        }
    }

    /// Prepends context to the message, preserving the error class (and
    /// therefore the exit code).
    pub fn context(self, prefix: impl std::fmt::Display) -> Self {
        match self {
            CliError::Config(m) => CliError::Config(format!("{prefix}: {m}")),
            CliError::Data(m) => CliError::Data(format!("{prefix}: {m}")),
            CliError::Estimation(m) => CliError::Estimation(format!("{prefix}: {m}")),
            CliError::Io { path, source } => CliError::Data(format!(
                "{prefix}: i/o error on {}: {source}",
                path.display()
            )),
        }
    }
}

impl From<elasto_core::Error> for CliError {
    fn from(e: elasto_core::Error) -> Self {
        use elasto_core::Error as E;
        match &e {
            E::InvalidSpec { .. } | E::InvalidConfig { .. } => CliError::Config(e.to_string()),
            E::OutOfDomain { .. } | E::ShapeMismatch { .. } => CliError::Data(e.to_string()),
            E::DegenerateInput { .. } | E::EstimationFailed { .. } => {
                CliError::Estimation(e.to_string())
            }
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_follow_the_contract() {
        assert_eq!(CliError::config("x").exit_code(), 2);
        assert_eq!(CliError::data("x").exit_code(), 3);
        assert_eq!(
            CliError::io("f", std::io::Error::other("x")).exit_code(),
            3
        );
        assert_eq!(CliError::estimation("x").exit_code(), 4);
    }

    #[test]
    fn core_errors_map_onto_the_three_classes() {
        use elasto_core::Error as E;
        let config = E::InvalidConfig {
            reason: "bad".into(),
        };
        let shape = E::ShapeMismatch {
            reason: "bad".into(),
        };
        let degenerate = E::DegenerateInput {
            reason: "bad".into(),
        };
        assert_eq!(CliError::from(config).exit_code(), 2);
        assert_eq!(CliError::from(shape).exit_code(), 3);
        assert_eq!(CliError::from(degenerate).exit_code(), 4);
    }
}
