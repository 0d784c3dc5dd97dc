//! Scenario-driven front end for `bcrb`: config parsing, reports, sweeps and
//! the acceptance suite.

pub mod acceptance;
pub mod config;
pub mod output;
pub mod potential;
pub mod sweep;

use std::path::PathBuf;

use thiserror::Error;

/// Environment variable holding the worker thread count.
pub const THREADS_ENV: &str = "BCRB_THREADS";

/// Exit code when an asserted inequality fails.
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_PARSE: i32 = 2;
pub const EXIT_VALIDATION: i32 = 3;
pub const EXIT_CAPABILITY: i32 = 4;
pub const EXIT_IO: i32 = 5;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}:{line}:{column}: {message}")]
    Parse { path: String, line: usize, column: usize, message: String },

    #[error("invalid scenario: {0}")]
    Validation(String),

    #[error("numerical capability: {0}")]
    Capability(String),

    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse { .. } => EXIT_PARSE,
            CliError::Validation(_) => EXIT_VALIDATION,
            CliError::Capability(_) => EXIT_CAPABILITY,
            CliError::Io { .. } => EXIT_IO,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }
}

/// Whether a core error means the numerics cannot handle the request, as
/// opposed to an invalid scenario.
pub fn is_capability(e: &bcrb::Error) -> bool {
    use bcrb::Error::*;
    matches!(
        e,
        Capability(_) | Quadrature(_) | IntegrationDomain { .. } | Evaluation(_) | Iteration { .. } | ContractionViolation { .. }
    )
}

impl From<bcrb::Error> for CliError {
    fn from(e: bcrb::Error) -> Self {
        if is_capability(&e) {
            CliError::Capability(e.to_string())
        } else {
            CliError::Validation(e.to_string())
        }
    }
}

/// Sizes the global rayon pool from [`THREADS_ENV`]; unset or `0` keeps the
/// rayon default.
pub fn init_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .map_err(|_| CliError::Validation(format!("{THREADS_ENV} must be a nonnegative integer, got `{raw}`")))?;
    if n > 0 {
        // a second initialization in the same process keeps the first pool
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

/// 1-based line and column of a byte offset.
pub fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let offset = offset.min(text.len());
    let before = &text[..offset];
    let line = before.matches('\n').count() + 1;
    let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, column)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn line_col_counts_from_one() {
        let t = "a = 1\nbb = 2\n";
        assert_eq!(line_col(t, 0), (1, 1));
        assert_eq!(line_col(t, 6), (2, 1));
        assert_eq!(line_col(t, 9), (2, 4));
    }

    #[test]
    fn core_errors_map_to_exit_codes() {
        let e: CliError = bcrb::Error::Capability("x".into()).into();
        assert_eq!(e.exit_code(), EXIT_CAPABILITY);
        let e: CliError = bcrb::Error::Domain("x".into()).into();
        assert_eq!(e.exit_code(), EXIT_VALIDATION);
    }
}
