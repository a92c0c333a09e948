//! Command-line front end for `ddsys-core`: dataset files, analysis
//! commands, JSON reports and the Monte-Carlo verification suites.

pub mod commands;
pub mod io;
pub mod report;
pub mod verify;

pub use commands::{execute, Cli, Outcome};
pub use report::AnalysisReport;

/// Exit code for a run that produced a conclusive report.
pub const EXIT_OK: i32 = 0;
/// Exit code for errors.
pub const EXIT_ERROR: i32 = 1;
/// Exit code for a valid but not informative or inconclusive analysis.
pub const EXIT_INCONCLUSIVE: i32 = 2;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("ParseError: line {line}, {field}: {message}")]
    Parse {
        line: usize,
        field: String,
        message: String,
    },
    #[error("IoError: {0}")]
    Io(String),
    #[error("UsageError: {0}")]
    Usage(String),
    #[error("{name}: {source}", name = error_name(source))]
    Core {
        #[from]
        source: ddsys_core::Error,
    },
}

/// Variant name of a library error, e.g. `MarkovMismatch`.
pub fn error_name(e: &ddsys_core::Error) -> String {
    let dbg = format!("{e:?}");
    dbg.chars().take_while(|c| c.is_alphanumeric()).collect()
}
