//! Innovation-form models, feedback-free triangularization and minimum
//! error variance estimation of `y` from `w`.
//!
//! `no_std` with `alloc`. File formats and the command-line tool live in the
//! `innovest` crate.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod error;
pub mod estimator;
pub mod fixtures;
pub mod golden;
pub mod linalg;
pub mod metrics;
pub mod models;
pub mod predictor;
pub mod realization;
pub mod series;
pub mod simulation;
pub mod sysid;

pub use error::{Error, ErrorClass, Result};
pub use estimator::{filter, synthesize, synthesize_from_joint};
pub use linalg::Matrix;
pub use models::{EstimatorModel, InnovationJointModel, StateSpaceModel, TriangularJointModel};
pub use realization::{to_innovation_form, triangularize, Tolerances};
pub use series::{Series, Trajectory};
