//! Command-line harness around `evnav-core`: instance file formats,
//! experiment configuration, the synthetic instance generator, the
//! multi-seed runner, and trace reporting.

pub mod config;
pub mod feasibility_io;
pub mod generate;
pub mod instance;
pub mod report;
pub mod runner;

use std::path::{Path, PathBuf};

pub use config::ExperimentConfig;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{file}:{line}: {msg}")]
    Parse { file: PathBuf, line: usize, msg: String },
    #[error("{0}")]
    Config(String),
    #[error("infeasible instance: {0}")]
    Infeasible(String),
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn parse(file: &Path, line: usize, msg: impl Into<String>) -> Self {
        CliError::Parse { file: file.to_path_buf(), line, msg: msg.into() }
    }

    pub fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        CliError::Io { context: context.into(), source }
    }

    /// Process exit code: 2 for configuration/validation problems,
    /// 3 for infeasible instances.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Infeasible(_) => 3,
            _ => 2,
        }
    }
}

/// Writes a file atomically: temp file in the same directory, then rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let tmp = path.with_file_name(format!(
        "{}.tmp",
        path.file_name().and_then(|n| n.to_str()).unwrap_or("out")
    ));
    std::fs::write(&tmp, bytes).map_err(|e| CliError::io(format!("writing {}", tmp.display()), e))?;
    std::fs::rename(&tmp, path)
        .map_err(|e| CliError::io(format!("renaming into {}", path.display()), e))
}
