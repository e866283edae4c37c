//! Comparison of the full worked-example chain against its two-decimal
//! reference values.

use alloc::string::String;
use alloc::vec::Vec;
use alloc::format;

use crate::error::Result;
use crate::estimator;
use crate::fixtures::{self, GOLDEN_TOL, ROUNDED_DATA_TOL};
use crate::linalg::{self, Matrix};
use crate::models::{EstimatorModel, TriangularJointModel};
use crate::realization::{self, to_innovation_form, Tolerances};

#[derive(Debug, Clone, PartialEq)]
pub struct GoldenCheck {
    pub name: String,
    pub got: f64,
    pub want: f64,
}

impl GoldenCheck {
    pub fn diff(&self) -> f64 {
        (self.got - self.want).abs()
    }

    pub fn pass(&self) -> bool {
        self.diff() <= GOLDEN_TOL
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sec5Report {
    pub checks: Vec<GoldenCheck>,
    pub p1: usize,
    pub p2: usize,
    pub feedback_residual: f64,
    /// Triangular form with states sign-aligned to the printed `T`.
    pub triangular: TriangularJointModel,
    pub estimator: EstimatorModel,
}

impl Sec5Report {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(GoldenCheck::pass)
    }

    pub fn max_diff(&self) -> f64 {
        self.checks.iter().map(GoldenCheck::diff).fold(0.0, f64::max)
    }
}

fn push_matrix(out: &mut Vec<GoldenCheck>, name: &str, got: &Matrix, want: &Matrix) {
    for i in 0..want.nrows() {
        for j in 0..want.ncols() {
            out.push(GoldenCheck { name: format!("{name}[{}][{}]", i + 1, j + 1), got: got[(i, j)], want: want[(i, j)] });
        }
    }
}

/// Flips the sign of each state whose row of `T` points away from the
/// corresponding row of `reference`.
pub fn align_signs(t: &TriangularJointModel, reference: &Matrix) -> TriangularJointModel {
    let n = t.n();
    let signs: Vec<f64> = (0..n)
        .map(|i| if t.t.row(i).dot(&reference.row(i)) < 0.0 { -1.0 } else { 1.0 })
        .collect();
    let s1 = Matrix::from_diagonal(&nalgebra::DVector::from_column_slice(&signs[..t.p1]));
    let s2 = Matrix::from_diagonal(&nalgebra::DVector::from_column_slice(&signs[t.p1..]));
    let s = Matrix::from_diagonal(&nalgebra::DVector::from_column_slice(&signs));
    TriangularJointModel {
        a11: &s1 * &t.a11 * &s1,
        a12: &s1 * &t.a12 * &s2,
        a22: &s2 * &t.a22 * &s2,
        k11: &s1 * &t.k11,
        k12: &s1 * &t.k12,
        k22: &s2 * &t.k22,
        c11: &t.c11 * &s1,
        c12: &t.c12 * &s2,
        c22: &t.c22 * &s2,
        t: &s * &t.t,
        ..t.clone()
    }
}

/// Runs state space → innovation form → triangular form → estimator on the
/// worked example. The printed data are rounded, so the triangularization
/// uses [`ROUNDED_DATA_TOL`].
pub fn sec5() -> Result<Sec5Report> {
    let sol = to_innovation_form(&fixtures::state_space())?;
    let mut checks = Vec::new();
    push_matrix(&mut checks, "P", &sol.state_cov, &fixtures::mat2(&fixtures::P));
    push_matrix(&mut checks, "Cbar", &sol.cbar, &fixtures::mat2(&fixtures::CBAR));
    push_matrix(&mut checks, "Lambda0", &sol.lambda0, &fixtures::mat2(&fixtures::LAMBDA0));
    push_matrix(&mut checks, "Pi", &sol.riccati.pi, &fixtures::mat2(&fixtures::PI));
    push_matrix(&mut checks, "Delta", &sol.riccati.delta, &fixtures::mat2(&fixtures::DELTA));
    push_matrix(&mut checks, "K", &sol.riccati.gain, &fixtures::mat2(&fixtures::GAIN));

    let tol = Tolerances { rank_tol: ROUNDED_DATA_TOL, tol_fb: ROUNDED_DATA_TOL };
    let fb = realization::check_feedback_free(&sol.model, tol)?;
    let tri = align_signs(&realization::triangularize(&sol.model, tol)?, &fixtures::printed_transform());
    let want = fixtures::triangular_printed();
    push_matrix(&mut checks, "T", &tri.t, &want.t);
    for (name, got, w) in [
        ("A11", &tri.a11, &want.a11),
        ("A12", &tri.a12, &want.a12),
        ("A22", &tri.a22, &want.a22),
        ("K11", &tri.k11, &want.k11),
        ("K12", &tri.k12, &want.k12),
        ("K22", &tri.k22, &want.k22),
        ("C11", &tri.c11, &want.c11),
        ("C12", &tri.c12, &want.c12),
        ("C22", &tri.c22, &want.c22),
    ] {
        push_matrix(&mut checks, name, got, w);
    }
    let mut eig: Vec<f64> = linalg::eigenvalues(&sol.model.a)?.iter().map(|z| z.re).collect();
    eig.sort_by(|a, b| b.total_cmp(a));
    for (i, (g, w)) in eig.iter().zip([0.85, 0.5]).enumerate() {
        checks.push(GoldenCheck { name: format!("eig(A)[{}]", i + 1), got: *g, want: w });
    }

    let est = estimator::synthesize(&tri)?;
    let want = fixtures::estimator_printed();
    push_matrix(&mut checks, "Atil", &est.atil, &want.atil);
    push_matrix(&mut checks, "Ktil", &est.ktil, &want.ktil);
    push_matrix(&mut checks, "Ctil", &est.ctil, &want.ctil);
    push_matrix(&mut checks, "D0", &est.d0, &want.d0);
    Ok(Sec5Report { checks, p1: fb.p1, p2: fb.p2, feedback_residual: fb.residual, triangular: tri, estimator: est })
}
