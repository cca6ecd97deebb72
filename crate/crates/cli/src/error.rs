use std::fmt::Display;

use thiserror::Error;

/// Failure classes, one per exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("property violated: {0}")]
    Violation(String),
    #[error("configuration error: {0:#}")]
    Config(anyhow::Error),
    #[error("i/o error: {0:#}")]
    Io(anyhow::Error),
}

impl CliError {
    pub fn code(&self) -> u8 {
        match self {
            CliError::Violation(_) => 1,
            CliError::Config(_) => 2,
            CliError::Io(_) => 3,
        }
    }

    pub fn config(msg: impl Display) -> Self {
        CliError::Config(anyhow::anyhow!("{msg}"))
    }

    /// Sorts a library error into a class and prefixes `context`.
    pub fn core(e: ccl_core::Error, context: impl Display) -> Self {
        use ccl_core::Error as E;
        let io = matches!(
            e,
            E::Io(_) | E::BadMagic { .. } | E::Truncated { .. } | E::CountMismatch { .. } | E::Checkpoint(_)
        );
        let err = anyhow::Error::new(e).context(context.to_string());
        if io {
            CliError::Io(err)
        } else {
            CliError::Config(err)
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// Attaches context to I/O-flavoured results.
pub trait IoContext<T> {
    fn io_ctx(self, what: impl FnOnce() -> String) -> CliResult<T>;
}

impl<T, E> IoContext<T> for Result<T, E>
where
    E: std::error::Error + Send + Sync + 'static,
{
    fn io_ctx(self, what: impl FnOnce() -> String) -> CliResult<T> {
        self.map_err(|e| CliError::Io(anyhow::Error::new(e).context(what())))
    }
}
