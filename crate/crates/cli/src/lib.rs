//! Command-line runner for two-node Dicke-ensemble redshift simulations.
//!
//! Each command reads a TOML scenario, writes CSV files and a `manifest.toml`
//! under `$DICKENET_OUTPUT_ROOT/<name>/<command>` and maps failures to exit
//! codes: 0 success, 1 verification failure, 2 bad config, 3 numeric or I/O
//! failure.

use std::fmt;

pub mod config;
pub mod output;
pub mod run;
pub mod verify;

pub use config::{ConfigError, LoadedConfig, ScenarioConfig};

#[derive(Debug)]
pub enum CliError {
    Config(ConfigError),
    Verification(String),
    Numeric(String),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Verification(_) => 1,
            CliError::Config(_) => 2,
            CliError::Numeric(_) | CliError::Io(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(e) => write!(f, "config error: {e}"),
            CliError::Verification(m) => write!(f, "verification failed: {m}"),
            CliError::Numeric(m) => write!(f, "numeric failure: {m}"),
            CliError::Io(m) => write!(f, "i/o failure: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e)
    }
}
