//! Batch experiment runner for `instab-core`: parses a JSON configuration,
//! runs each experiment and writes CSV data, JSON reports and a summary.

pub mod config;
pub mod presets;
pub mod run;

pub use config::Config;
pub use run::{run, Summary};

/// Environment variable overriding the default output directory.
pub const OUT_ENV: &str = "INSTAB_OUT";

/// Output directory when neither `--out` nor `INSTAB_OUT` is given.
pub const DEFAULT_OUT: &str = "instab-out";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error at {path}:{line}:{column}: {message}")]
    Config { path: String, line: usize, column: usize, message: String },
    #[error("{0}")]
    Usage(String),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Core(#[from] instab_core::Error),
}

/// Resolves the output directory: flag, then environment, then default.
pub fn out_dir(flag: Option<std::path::PathBuf>) -> std::path::PathBuf {
    flag.or_else(|| std::env::var_os(OUT_ENV).map(Into::into)).unwrap_or_else(|| DEFAULT_OUT.into())
}
