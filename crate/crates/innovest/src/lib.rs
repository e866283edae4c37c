//! File formats and the `innovest` command-line tool on top of
//! `innovest-core`.

pub mod cli;
pub mod error;
pub mod json;
pub mod report;
pub mod trajectory;

pub use error::{CliError, Result};
pub use json::ModelDoc;
