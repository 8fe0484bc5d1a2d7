//! Experiment harness for `alas-core`: configuration files, trace CSVs,
//! summaries and theory reports. The `alas` binary is a thin wrapper.

pub mod config;
pub mod experiment;
pub mod problems;
pub mod summary;
pub mod theory_report;
pub mod trace_io;

use alas_core::AlasError;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Rejected before any run starts.
    #[error("configuration error: {0}")]
    Config(String),
    #[error("trace file {path}: {msg}")]
    Trace { path: String, msg: String },
    #[error("empty trace: {0}")]
    EmptyTrace(String),
    #[error(transparent)]
    Core(#[from] AlasError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, CliError>;
