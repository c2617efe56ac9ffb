//! Error type shared across the core modules.

use thiserror::Error;

/// Errors raised by channel synthesis, acquisition, detection, the monitor
/// state machine, and trace persistence.
#[derive(Debug, Error)]
pub enum Error {
    /// A configuration value violates its documented invariants.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// An operation received arguments outside its contract.
    #[error("invalid argument: {0}")]
    Argument(String),

    /// Input is structurally valid but degenerate (e.g. all-zero power).
    #[error("degenerate input: {0}")]
    Degenerate(String),

    /// The monitor was driven in a phase that does not permit the operation.
    #[error("invalid monitor state: {0}")]
    State(String),

    /// A trace line could not be parsed; `line` is 1-based.
    #[error("trace parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    /// A trace record carries an unsupported schema version.
    #[error("unsupported trace schema version {found} at line {line} (expected {expected})")]
    Version {
        line: usize,
        found: u32,
        expected: u32,
    },

    /// File-system failure, annotated with the path involved.
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// Annotates an I/O failure with the path involved.
    pub fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        Error::Io {
            path: path.display().to_string(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
