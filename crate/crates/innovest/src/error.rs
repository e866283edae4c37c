use std::fmt;

use innovest_core::{Error, ErrorClass};
use serde::Serialize;

/// Failure of a file format operation or a command.
#[derive(Debug)]
pub enum CliError {
    Io { path: String, source: std::io::Error },
    Parse(String),
    Core(Error),
    GoldenMismatch { failed: usize, max_diff: f64 },
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Io { path, source } => write!(f, "{path}: {source}"),
            CliError::Parse(msg) => write!(f, "parse error: {msg}"),
            CliError::Core(e) => write!(f, "{e}"),
            CliError::GoldenMismatch { failed, max_diff } => {
                write!(f, "{failed} golden values outside tolerance (max diff {max_diff:.4})")
            }
        }
    }
}

impl std::error::Error for CliError {}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Parse(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Parse(e.to_string())
    }
}

impl CliError {
    pub fn class(&self) -> &'static str {
        match self {
            CliError::Io { .. } => "io",
            CliError::Parse(_) => "parse",
            CliError::Core(e) => match e.class() {
                ErrorClass::Validation => "validation",
                ErrorClass::Solver => "solver",
                ErrorClass::Feedback => "feedback",
                ErrorClass::Identification => "identification",
            },
            CliError::GoldenMismatch { .. } => "golden_mismatch",
        }
    }

    /// 2 parse/validate, 3 solver, 4 feedback, 5 identification, 1 golden
    /// mismatch.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io { .. } | CliError::Parse(_) => 2,
            CliError::Core(e) => match e.class() {
                ErrorClass::Validation => 2,
                ErrorClass::Solver => 3,
                ErrorClass::Feedback => 4,
                ErrorClass::Identification => 5,
            },
            CliError::GoldenMismatch { .. } => 1,
        }
    }

    /// `{"error":{"class":…,"exit_code":…,"message":…}}`
    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct Body<'a> {
            class: &'a str,
            exit_code: i32,
            message: String,
        }
        #[derive(Serialize)]
        struct Envelope<'a> {
            error: Body<'a>,
        }
        let env = Envelope { error: Body { class: self.class(), exit_code: self.exit_code(), message: self.to_string() } };
        serde_json::to_string(&env).unwrap_or_else(|_| String::from("{\"error\":{}}"))
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;

pub(crate) fn io_err(path: &std::path::Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io { path: path.display().to_string(), source }
}
