//! Sweep orchestration behind the `lmg` binary: configuration merging,
//! deterministic table rendering, and one driver function per
//! subcommand. The binary is a thin shell around these pieces so the
//! integration tests can exercise everything in process.

pub mod commands;
pub mod config;
pub mod output;

use std::fmt;

/// Failure classes, each with its own process exit code.
#[derive(Debug)]
pub enum CliError {
    /// Unparseable or inconsistent configuration (exit 2).
    Config(String),
    /// The computation itself failed (exit 3).
    Numeric(lmg::Error),
    /// Filesystem trouble (exit 4).
    Io(std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numeric(_) => 3,
            CliError::Io(_) => 4,
        }
    }

    pub fn config(msg: impl Into<String>) -> CliError {
        CliError::Config(msg.into())
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(msg) => write!(f, "configuration error: {msg}"),
            CliError::Numeric(err) => write!(f, "numerical failure: {err}"),
            CliError::Io(err) => write!(f, "io error: {err}"),
        }
    }
}

impl From<lmg::Error> for CliError {
    fn from(err: lmg::Error) -> CliError {
        CliError::Numeric(err)
    }
}

impl From<std::io::Error> for CliError {
    fn from(err: std::io::Error) -> CliError {
        CliError::Io(err)
    }
}
