use alloc::string::String;
use core::fmt;

use crate::models::ValidationReport;

pub type Result<T, E = Error> = core::result::Result<T, E>;

/// Failure classes surfaced by the library.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Inconsistent matrix shapes or partition sizes.
    Dimension(String),
    /// An input held NaN or infinite entries.
    NonFinite { what: &'static str },
    /// A model failed structural validation.
    Invalid(ValidationReport),
    /// A required matrix is not stable.
    Unstable { what: &'static str, radius: f64 },
    /// An iterative decomposition did not converge.
    SolverFailure { solver: &'static str, rows: usize, cols: usize },
    /// Riccati iteration left the positive definite cone.
    IndefiniteInnovation { iteration: usize },
    /// Iteration cap exhausted.
    NoConvergence { solver: &'static str, iterations: usize, residual: f64 },
    /// The converged innovation covariance is not positive definite.
    DegenerateSpectrum { min_eigenvalue: f64 },
    /// Lower-left blocks of the transformed system exceed the tolerance.
    FeedbackViolation { residual: f64, tol: f64 },
    /// The input innovation covariance block is singular.
    DegenerateInputInnovation,
    /// A noise covariance could not be factored.
    DegenerateCovariance { what: &'static str },
    /// Zero variance in output component `component`, VAF undefined.
    UndefinedVaf { component: usize },
    /// Empty input where at least one sample is required.
    Empty { what: &'static str },
    /// Partial parameterizations need the known lower subsystem.
    MissingFixedBlocks,
    /// Parameter vector did not decode to a finite model.
    Decode(String),
    /// Every optimizer start diverged.
    IdentificationFailure { starts: usize, reason: String },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Dimension(msg) => write!(f, "dimension mismatch: {msg}"),
            Error::NonFinite { what } => write!(f, "{what} contains non-finite values"),
            Error::Invalid(report) => write!(f, "invalid model: {report}"),
            Error::Unstable { what, radius } => {
                write!(f, "{what} is not stable: spectral radius {radius:.6} >= 1")
            }
            Error::SolverFailure { solver, rows, cols } => {
                write!(f, "{solver} did not converge on a {rows}x{cols} matrix")
            }
            Error::IndefiniteInnovation { iteration } => write!(
                f,
                "innovation covariance lost positive definiteness at Riccati iteration {iteration}"
            ),
            Error::NoConvergence { solver, iterations, residual } => write!(
                f,
                "{solver} did not converge after {iterations} iterations (last residual {residual:.3e})"
            ),
            Error::DegenerateSpectrum { min_eigenvalue } => write!(
                f,
                "innovation covariance is not positive definite (min eigenvalue {min_eigenvalue:.3e})"
            ),
            Error::FeedbackViolation { residual, tol } => write!(
                f,
                "feedback from y to w detected: lower-left residual {residual:.3e} exceeds {tol:.1e}"
            ),
            Error::DegenerateInputInnovation => {
                write!(f, "input innovation covariance Q22 is singular")
            }
            Error::DegenerateCovariance { what } => write!(f, "cannot factor covariance {what}"),
            Error::UndefinedVaf { component } => {
                write!(f, "VAF undefined: output component {component} has zero variance")
            }
            Error::Empty { what } => write!(f, "{what} is empty"),
            Error::MissingFixedBlocks => {
                write!(f, "partial parameterization requires fixed A22, K22, C22 and Q22")
            }
            Error::Decode(msg) => write!(f, "parameter decode failed: {msg}"),
            Error::IdentificationFailure { starts, reason } => {
                write!(f, "identification failed on all {starts} starts: {reason}")
            }
        }
    }
}

/// Coarse grouping used for process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Validation,
    Solver,
    Feedback,
    Identification,
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Dimension(_)
            | Error::NonFinite { .. }
            | Error::Invalid(_)
            | Error::Empty { .. }
            | Error::MissingFixedBlocks
            | Error::UndefinedVaf { .. }
            | Error::Decode(_) => ErrorClass::Validation,
            Error::Unstable { .. }
            | Error::SolverFailure { .. }
            | Error::IndefiniteInnovation { .. }
            | Error::NoConvergence { .. }
            | Error::DegenerateSpectrum { .. }
            | Error::DegenerateInputInnovation
            | Error::DegenerateCovariance { .. } => ErrorClass::Solver,
            Error::FeedbackViolation { .. } => ErrorClass::Feedback,
            Error::IdentificationFailure { .. } => ErrorClass::Identification,
        }
    }
}
