// SPDX-License-Identifier: MIT OR Apache-2.0

use std::fmt;
use std::path::Path;

use serde::Serialize;

#[derive(Debug)]
pub enum CliError {
    Input(String),
    Convergence(String),
}

pub type CliResult<T> = Result<T, CliError>;

impl CliError {
    pub fn input(msg: impl Into<String>) -> Self {
        CliError::Input(msg.into())
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) => 2,
            CliError::Convergence(_) => 3,
        }
    }

    /// Single-line JSON for standard error.
    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct Line<'a> {
            error: &'a str,
            message: &'a str,
            exit_code: u8,
        }
        let (kind, message) = match self {
            CliError::Input(m) => ("input", m.as_str()),
            CliError::Convergence(m) => ("convergence", m.as_str()),
        };
        serde_json::to_string(&Line {
            error: kind,
            message,
            exit_code: self.exit_code(),
        })
        .expect("error line serializes")
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Input(m) | CliError::Convergence(m) => f.write_str(m),
        }
    }
}

impl From<fused_changepoint::Error> for CliError {
    fn from(e: fused_changepoint::Error) -> Self {
        match e {
            fused_changepoint::Error::InvalidInput(_) => CliError::Input(e.to_string()),
            fused_changepoint::Error::Convergence { .. } => CliError::Convergence(e.to_string()),
        }
    }
}

pub fn io_error(path: &Path, e: std::io::Error) -> CliError {
    CliError::Input(format!("{}: {e}", path.display()))
}
