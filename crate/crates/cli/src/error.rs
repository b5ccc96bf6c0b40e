use std::fmt;

use serde::Serialize;

/// Failure classes with their process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ErrorKind {
    Config,
    Numerical,
    Io,
}

impl ErrorKind {
    pub fn exit_code(self) -> u8 {
        match self {
            ErrorKind::Config => 2,
            ErrorKind::Numerical => 3,
            ErrorKind::Io => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CliError {
    pub kind: ErrorKind,
    pub message: String,
}

impl CliError {
    pub fn config(message: impl Into<String>) -> Self {
        Self { kind: ErrorKind::Config, message: message.into() }
    }

    pub fn numerical(message: impl Into<String>) -> Self {
        Self { kind: ErrorKind::Numerical, message: message.into() }
    }

    pub fn io(message: impl Into<String>) -> Self {
        Self { kind: ErrorKind::Io, message: message.into() }
    }

    /// `{"error": {"kind": ..., "message": ...}}` on one line.
    pub fn to_json(&self) -> String {
        serde_json::json!({ "error": self }).to_string()
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?} error: {}", self.kind, self.message)
    }
}

impl std::error::Error for CliError {}

impl From<cqed::Error> for CliError {
    fn from(e: cqed::Error) -> Self {
        use cqed::Error::*;
        match e {
            InvalidDimension(_)
            | DimensionMismatch { .. }
            | InvalidParameter(_)
            | ManifoldOutOfRange { .. }
            | NoDrive
            | NegativeTime(_)
            | EmptyWindow { .. }
            | FitPrecondition(_) => CliError::config(e.to_string()),
            DegenerateSteadyState | ZeroMeanPhotonNumber | DegenerateFit | Numerical(_) => {
                CliError::numerical(e.to_string())
            }
        }
    }
}
