//! The two-state, scalar-`y`, scalar-`w` reference system used throughout the
//! tests, the CLI `reproduce sec5` command and the README.
//!
//! Printed values are rounded to two decimals, so the chain computed from
//! [`state_space`] is feedback free only up to rounding (lower-left residual
//! around `1e-3`). [`exact_triangular`] and [`exact_joint`] are an exactly
//! feedback-free system built from the rounded triangular blocks.

use num_traits::Float;

use crate::linalg::{from_rows, Matrix};
use crate::models::{EstimatorModel, InnovationJointModel, StateSpaceModel, TriangularJointModel};

/// Rank and feedback tolerances suited to two-decimal input data.
pub const ROUNDED_DATA_TOL: f64 = 1e-2;

/// Absolute tolerance for comparisons against two-decimal reference values.
pub const GOLDEN_TOL: f64 = 0.02;

pub const P: [[f64; 2]; 2] = [[11.34, 9.22], [9.22, 7.96]];
pub const CBAR: [[f64; 2]; 2] = [[17.24, 15.28], [3.79, 2.47]];
pub const LAMBDA0: [[f64; 2]; 2] = [[31.64, 3.72], [3.72, 2.28]];
pub const PI: [[f64; 2]; 2] = [[11.1, 8.98], [8.98, 7.71]];
pub const DELTA: [[f64; 2]; 2] = [[2.0, 1.0], [1.0, 1.0]];
pub const GAIN: [[f64; 2]; 2] = [[0.5, 0.9], [0.49, 0.11]];

pub fn mat2(m: &[[f64; 2]; 2]) -> Matrix {
    from_rows(&[&m[0], &m[1]])
}

/// Driven model with `v ~ N(0, I)`.
pub fn state_space() -> StateSpaceModel {
    StateSpaceModel {
        a: from_rows(&[&[1.08, -0.23], &[0.58, 0.27]]),
        b: from_rows(&[&[-0.56, -1.4], &[-0.56, -0.6]]),
        c: from_rows(&[&[-0.25, 2.25], &[1.24, -1.25]]),
        d: from_rows(&[&[-0.14, -1.0], &[0.0, -1.0]]),
        p: 1,
        q: 1,
    }
}

/// Innovation form of [`state_space`] with the rounded printed gain.
pub fn innovation_printed() -> InnovationJointModel {
    InnovationJointModel {
        a: from_rows(&[&[1.08, -0.23], &[0.58, 0.27]]),
        k: mat2(&GAIN),
        c: from_rows(&[&[-0.25, 2.25], &[1.24, -1.25]]),
        cov: mat2(&DELTA),
        p: 1,
        q: 1,
    }
}

/// Printed similarity `T = Vᵀ` (orthogonal up to a common scale of
/// `√0.9941`).
pub fn printed_transform() -> Matrix {
    from_rows(&[&[-0.71, -0.7], &[-0.7, 0.71]])
}

/// Printed triangular blocks.
pub fn triangular_printed() -> TriangularJointModel {
    TriangularJointModel {
        a11: from_rows(&[&[0.85]]),
        a12: from_rows(&[&[0.81]]),
        a22: from_rows(&[&[0.5]]),
        k11: from_rows(&[&[-0.7]]),
        k12: from_rows(&[&[-0.71]]),
        k22: from_rows(&[&[-0.56]]),
        c11: from_rows(&[&[-1.41]]),
        c12: from_rows(&[&[1.77]]),
        c22: from_rows(&[&[-1.76]]),
        q11: from_rows(&[&[2.0]]),
        q12: from_rows(&[&[1.0]]),
        q22: from_rows(&[&[1.0]]),
        t: printed_transform(),
        p1: 1,
        p2: 1,
        p: 1,
        q: 1,
    }
}

/// Printed estimator.
pub fn estimator_printed() -> EstimatorModel {
    EstimatorModel {
        atil: from_rows(&[&[0.85, -1.69], &[0.0, -0.49]]),
        ktil: from_rows(&[&[-1.42], &[-0.56]]),
        ctil: from_rows(&[&[-1.41, 3.53]]),
        d0: from_rows(&[&[1.0]]),
    }
}

/// Printed triangular blocks with the printed `T` normalized to an exact
/// orthogonal matrix.
pub fn exact_triangular() -> TriangularJointModel {
    let t = printed_transform();
    let scale = (0.71.powi(2) + 0.7.powi(2)).sqrt();
    TriangularJointModel { t: t / scale, ..triangular_printed() }
}

/// [`exact_triangular`] mapped back to the original coordinates; close to
/// [`innovation_printed`] and exactly feedback free.
pub fn exact_joint() -> InnovationJointModel {
    let tri = exact_triangular();
    let bar = tri.assemble().expect("fixture blocks are consistent");
    let t = &tri.t;
    let t_inv = t.transpose();
    InnovationJointModel {
        a: &t_inv * &bar.a * t,
        k: &t_inv * &bar.k,
        c: &bar.c * t,
        cov: bar.cov,
        p: 1,
        q: 1,
    }
}
