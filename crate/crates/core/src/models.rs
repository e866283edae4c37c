//! System forms: the raw driven model, the joint innovation form of `(y, w)`,
//! its block-triangular form and the estimator of `y` from `w`.
//!
//! Fields are public. The `new` constructors run [`validate`](StateSpaceModel::validate)
//! and refuse models with violations; code that mutates fields directly is
//! responsible for re-validating.
//!
//! Global minimality of a joint model is not checked. Only observability of
//! the lower subsystem `(A22, C22)` is enforced, at triangularization.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};
use crate::linalg::{self, block, block2x2, hstack, vstack, Matrix};

const SYMMETRY_TOL: f64 = 1e-9;
/// Slack allowed on the estimator's spectral radius.
pub const ESTIMATOR_RADIUS_SLACK: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    Shape(String),
    NonFinite { matrix: &'static str },
    Unstable { matrix: &'static str, radius: f64 },
    NotSymmetric { matrix: &'static str, asymmetry: f64 },
    NotPositiveDefinite { matrix: &'static str, min_eigenvalue: f64 },
    Solver { matrix: &'static str },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Shape(msg) => write!(f, "{msg}"),
            Violation::NonFinite { matrix } => write!(f, "{matrix} has non-finite entries"),
            Violation::Unstable { matrix, radius } => {
                write!(f, "spectral radius of {matrix} is {radius} >= 1")
            }
            Violation::NotSymmetric { matrix, asymmetry } => {
                write!(f, "{matrix} is not symmetric (|M - M^T|_F = {asymmetry:.3e})")
            }
            Violation::NotPositiveDefinite { matrix, min_eigenvalue } => {
                write!(f, "{matrix} is not positive definite (min eigenvalue {min_eigenvalue})")
            }
            Violation::Solver { matrix } => write!(f, "eigenvalues of {matrix} did not converge"),
        }
    }
}

/// Outcome of structural validation: empty means the model passed.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }

    /// A well-formed model whose only defect is instability is reported as
    /// [`Error::Unstable`], since no stationary solution exists.
    pub fn into_result(self) -> Result<()> {
        match self.violations.as_slice() {
            [] => Ok(()),
            [Violation::Unstable { matrix, radius }] => Err(Error::Unstable { what: matrix, radius: *radius }),
            _ => Err(Error::Invalid(self)),
        }
    }

    fn shape(&mut self, what: &str, m: &Matrix, rows: usize, cols: usize) -> bool {
        if m.shape() == (rows, cols) {
            true
        } else {
            self.violations.push(Violation::Shape(format!(
                "{what} is {}x{}, expected {rows}x{cols}",
                m.nrows(),
                m.ncols()
            )));
            false
        }
    }

    fn finite(&mut self, matrix: &'static str, m: &Matrix) {
        if !linalg::is_finite(m) {
            self.violations.push(Violation::NonFinite { matrix });
        }
    }

    fn stable(&mut self, matrix: &'static str, m: &Matrix, limit: f64) {
        if !linalg::is_finite(m) {
            return;
        }
        match linalg::spectral_radius(m) {
            Ok(radius) if radius >= limit => {
                self.violations.push(Violation::Unstable { matrix, radius })
            }
            Ok(_) => {}
            Err(_) => self.violations.push(Violation::Solver { matrix }),
        }
    }

    fn positive_definite(&mut self, matrix: &'static str, m: &Matrix) {
        if !linalg::is_finite(m) {
            return;
        }
        let asym = linalg::asymmetry(m);
        if asym > SYMMETRY_TOL * (1.0 + m.norm()) {
            self.violations.push(Violation::NotSymmetric { matrix, asymmetry: asym });
            return;
        }
        match linalg::min_symmetric_eigenvalue(m) {
            Ok(min_eigenvalue) if min_eigenvalue <= 0.0 => {
                self.violations.push(Violation::NotPositiveDefinite { matrix, min_eigenvalue })
            }
            Ok(_) => {}
            Err(_) => self.violations.push(Violation::Solver { matrix }),
        }
    }

    fn positive_dims(&mut self, p: usize, q: usize) {
        if p == 0 || q == 0 {
            self.violations.push(Violation::Shape(format!(
                "output dimension p = {p} and input dimension q = {q} must both be positive"
            )));
        }
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return write!(f, "ok");
        }
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                write!(f, "; ")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

/// `x(t+1) = A x(t) + B v(t)`, `[y; w](t) = C x(t) + D v(t)` with
/// `v ~ N(0, I)` white.
#[derive(Debug, Clone, PartialEq)]
pub struct StateSpaceModel {
    pub a: Matrix,
    pub b: Matrix,
    pub c: Matrix,
    pub d: Matrix,
    pub p: usize,
    pub q: usize,
}

impl StateSpaceModel {
    pub fn new(a: Matrix, b: Matrix, c: Matrix, d: Matrix, p: usize, q: usize) -> Result<Self> {
        let m = Self { a, b, c, d, p, q };
        m.validate().into_result()?;
        Ok(m)
    }

    pub fn n(&self) -> usize {
        self.a.nrows()
    }

    /// Width of the driving noise.
    pub fn noise_dim(&self) -> usize {
        self.b.ncols()
    }

    pub fn validate(&self) -> ValidationReport {
        let mut r = ValidationReport::default();
        let n = self.a.nrows();
        let m = self.b.ncols();
        let out = self.p + self.q;
        r.positive_dims(self.p, self.q);
        let shapes = [
            r.shape("A", &self.a, n, n),
            r.shape("B", &self.b, n, m),
            r.shape("C", &self.c, out, n),
            r.shape("D", &self.d, out, m),
        ];
        for (name, mat) in [("A", &self.a), ("B", &self.b), ("C", &self.c), ("D", &self.d)] {
            r.finite(name, mat);
        }
        if shapes[0] {
            r.stable("A", &self.a, 1.0);
        }
        r
    }
}

/// Joint forward innovation form
/// `x(t+1) = A x(t) + K e(t)`, `[y; w](t) = C x(t) + e(t)`, `E[e eᵀ] = Q`.
#[derive(Debug, Clone, PartialEq)]
pub struct InnovationJointModel {
    pub a: Matrix,
    pub k: Matrix,
    pub c: Matrix,
    /// Innovation covariance `Q`.
    pub cov: Matrix,
    pub p: usize,
    pub q: usize,
}

impl InnovationJointModel {
    pub fn new(a: Matrix, k: Matrix, c: Matrix, cov: Matrix, p: usize, q: usize) -> Result<Self> {
        let m = Self { a, k, c, cov, p, q };
        m.validate().into_result()?;
        Ok(m)
    }

    pub fn n(&self) -> usize {
        self.a.nrows()
    }

    /// Rows of `C` producing `y`.
    pub fn c_y(&self) -> Matrix {
        block(&self.c, 0, 0, self.p, self.n())
    }

    /// Rows of `C` producing `w`.
    pub fn c_w(&self) -> Matrix {
        block(&self.c, self.p, 0, self.q, self.n())
    }

    /// Exchanges the roles of `y` and `w`.
    pub fn swap_roles(&self) -> InnovationJointModel {
        let (p, q) = (self.p, self.q);
        let perm: Vec<usize> = (p..p + q).chain(0..p).collect();
        let n = self.n();
        let c = Matrix::from_fn(p + q, n, |i, j| self.c[(perm[i], j)]);
        let k = Matrix::from_fn(n, p + q, |i, j| self.k[(i, perm[j])]);
        let cov = Matrix::from_fn(p + q, p + q, |i, j| self.cov[(perm[i], perm[j])]);
        InnovationJointModel { a: self.a.clone(), k, c, cov, p: q, q: p }
    }

    /// Applies state coordinates `x̄ = T x`.
    pub fn transform(&self, t: &Matrix) -> Result<InnovationJointModel> {
        let t_inv = t
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::Dimension(format!("similarity transform is singular")))?;
        Ok(InnovationJointModel {
            a: t * &self.a * &t_inv,
            k: t * &self.k,
            c: &self.c * t_inv,
            cov: self.cov.clone(),
            p: self.p,
            q: self.q,
        })
    }

    pub fn markov_parameters(&self, count: usize) -> Vec<Matrix> {
        linalg::markov_parameters(&self.a, &self.k, &self.c, count)
    }

    pub fn validate(&self) -> ValidationReport {
        let mut r = ValidationReport::default();
        let n = self.a.nrows();
        let out = self.p + self.q;
        r.positive_dims(self.p, self.q);
        let a_ok = r.shape("A", &self.a, n, n);
        r.shape("K", &self.k, n, out);
        r.shape("C", &self.c, out, n);
        let q_ok = r.shape("Q", &self.cov, out, out);
        for (name, mat) in [("A", &self.a), ("K", &self.k), ("C", &self.c), ("Q", &self.cov)] {
            r.finite(name, mat);
        }
        if a_ok {
            r.stable("A", &self.a, 1.0);
        }
        if q_ok {
            r.positive_definite("Q", &self.cov);
        }
        r
    }
}

/// Joint model in upper block-triangular coordinates `x̄ = T x`:
///
/// ```text
/// x̄(t+1) = [A11 A12; 0 A22] x̄(t) + [K11 K12; 0 K22] [e1; e2](t)
/// [y; w]  = [C11 C12; 0 C22] x̄(t) + [e1; e2](t)
/// ```
///
/// `x̄₁` has `p1` states, `x̄₂` has `p2`; `e1` has `p` channels, `e2` has `q`.
#[derive(Debug, Clone, PartialEq)]
pub struct TriangularJointModel {
    pub a11: Matrix,
    pub a12: Matrix,
    pub a22: Matrix,
    pub k11: Matrix,
    pub k12: Matrix,
    pub k22: Matrix,
    pub c11: Matrix,
    pub c12: Matrix,
    pub c22: Matrix,
    pub q11: Matrix,
    pub q12: Matrix,
    pub q22: Matrix,
    /// Similarity from the original coordinates.
    pub t: Matrix,
    pub p1: usize,
    pub p2: usize,
    pub p: usize,
    pub q: usize,
}

impl TriangularJointModel {
    pub fn n(&self) -> usize {
        self.p1 + self.p2
    }

    pub fn a(&self) -> Matrix {
        block2x2(&self.a11, &self.a12, &Matrix::zeros(self.p2, self.p1), &self.a22)
    }

    pub fn k(&self) -> Matrix {
        block2x2(&self.k11, &self.k12, &Matrix::zeros(self.p2, self.p), &self.k22)
    }

    pub fn c(&self) -> Matrix {
        block2x2(&self.c11, &self.c12, &Matrix::zeros(self.q, self.p1), &self.c22)
    }

    pub fn cov(&self) -> Matrix {
        block2x2(&self.q11, &self.q12, &self.q12.transpose(), &self.q22)
    }

    /// Full joint model in the triangular coordinates.
    pub fn assemble(&self) -> Result<InnovationJointModel> {
        self.check_shapes().into_result()?;
        Ok(InnovationJointModel {
            a: self.a(),
            k: self.k(),
            c: self.c(),
            cov: self.cov(),
            p: self.p,
            q: self.q,
        })
    }

    /// Reads the blocks of a joint model that is already upper
    /// block-triangular with `p1` leading states. Lower-left blocks must be
    /// exactly zero.
    pub fn extract(m: &InnovationJointModel, p1: usize, t: Matrix) -> Result<Self> {
        let n = m.n();
        let (p, q) = (m.p, m.q);
        if p1 > n || t.shape() != (n, n) {
            return Err(Error::Dimension(format!("partition p1 = {p1} of an order-{n} model")));
        }
        let p2 = n - p1;
        let lower_left = [
            ("A21", block(&m.a, p1, 0, p2, p1)),
            ("K21", block(&m.k, p1, 0, p2, p)),
            ("C21", block(&m.c, p, 0, q, p1)),
        ];
        for (name, b) in &lower_left {
            if b.iter().any(|&x| x != 0.0) {
                return Err(Error::Dimension(format!("{name} block is not zero")));
            }
        }
        Ok(Self {
            a11: block(&m.a, 0, 0, p1, p1),
            a12: block(&m.a, 0, p1, p1, p2),
            a22: block(&m.a, p1, p1, p2, p2),
            k11: block(&m.k, 0, 0, p1, p),
            k12: block(&m.k, 0, p, p1, q),
            k22: block(&m.k, p1, p, p2, q),
            c11: block(&m.c, 0, 0, p, p1),
            c12: block(&m.c, 0, p1, p, p2),
            c22: block(&m.c, p, p1, q, p2),
            q11: block(&m.cov, 0, 0, p, p),
            q12: block(&m.cov, 0, p, p, q),
            q22: block(&m.cov, p, p, q, q),
            t,
            p1,
            p2,
            p,
            q,
        })
    }

    /// Upper rows `[K11; 0]` of the gain acting on `e1`.
    pub fn k_e1(&self) -> Matrix {
        vstack(&self.k11, &Matrix::zeros(self.p2, self.p))
    }

    /// `[C11, C12]`.
    pub fn c_y(&self) -> Matrix {
        hstack(&self.c11, &self.c12)
    }

    /// Schur complement `Q11 − Q12 Q22⁻¹ Q21`: covariance of the part of `e1`
    /// not explained by `e2`.
    pub fn schur_complement(&self) -> Result<Matrix> {
        let chol = self.q22.clone().cholesky().ok_or(Error::DegenerateInputInnovation)?;
        Ok(&self.q11 - &self.q12 * chol.solve(&self.q12.transpose()))
    }

    fn check_shapes(&self) -> ValidationReport {
        let mut r = ValidationReport::default();
        let (p1, p2, p, q) = (self.p1, self.p2, self.p, self.q);
        r.positive_dims(p, q);
        let expected = [
            ("A11", &self.a11, p1, p1),
            ("A12", &self.a12, p1, p2),
            ("A22", &self.a22, p2, p2),
            ("K11", &self.k11, p1, p),
            ("K12", &self.k12, p1, q),
            ("K22", &self.k22, p2, q),
            ("C11", &self.c11, p, p1),
            ("C12", &self.c12, p, p2),
            ("C22", &self.c22, q, p2),
            ("Q11", &self.q11, p, p),
            ("Q12", &self.q12, p, q),
            ("Q22", &self.q22, q, q),
            ("T", &self.t, p1 + p2, p1 + p2),
        ];
        for (name, m, rows, cols) in expected {
            if r.shape(name, m, rows, cols) {
                r.finite(name, m);
            }
        }
        r
    }

    pub fn validate(&self) -> ValidationReport {
        let mut r = self.check_shapes();
        if !r.is_ok() {
            return r;
        }
        r.stable("A", &self.a(), 1.0);
        r.positive_definite("Q22", &self.q22);
        if linalg::asymmetry(&self.q11) > SYMMETRY_TOL * (1.0 + self.q11.norm()) {
            r.violations.push(Violation::NotSymmetric {
                matrix: "Q11",
                asymmetry: linalg::asymmetry(&self.q11),
            });
        }
        r
    }
}

/// Estimator of `y(t)` from `w(t), w(t−1), …`:
/// `x̂(t+1) = Ã x̂(t) + K̃ w(t)`, `ŷ(t) = C̃ x̂(t) + D₀ w(t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorModel {
    pub atil: Matrix,
    pub ktil: Matrix,
    pub ctil: Matrix,
    pub d0: Matrix,
}

impl EstimatorModel {
    pub fn new(atil: Matrix, ktil: Matrix, ctil: Matrix, d0: Matrix) -> Result<Self> {
        let m = Self { atil, ktil, ctil, d0 };
        m.validate().into_result()?;
        Ok(m)
    }

    pub fn n(&self) -> usize {
        self.atil.nrows()
    }

    pub fn p(&self) -> usize {
        self.ctil.nrows()
    }

    pub fn q(&self) -> usize {
        self.ktil.ncols()
    }

    /// `C̃ Ãᵏ K̃` for `k = 0..count`; the direct term `D₀` is separate.
    pub fn markov_parameters(&self, count: usize) -> Vec<Matrix> {
        linalg::markov_parameters(&self.atil, &self.ktil, &self.ctil, count)
    }

    pub fn validate(&self) -> ValidationReport {
        let mut r = ValidationReport::default();
        let n = self.atil.nrows();
        let p = self.ctil.nrows();
        let q = self.ktil.ncols();
        r.positive_dims(p, q);
        let a_ok = r.shape("Atil", &self.atil, n, n);
        r.shape("Ktil", &self.ktil, n, q);
        r.shape("Ctil", &self.ctil, p, n);
        r.shape("D0", &self.d0, p, q);
        for (name, mat) in [
            ("Atil", &self.atil),
            ("Ktil", &self.ktil),
            ("Ctil", &self.ctil),
            ("D0", &self.d0),
        ] {
            r.finite(name, mat);
        }
        if a_ok {
            r.stable("Atil", &self.atil, 1.0 + ESTIMATOR_RADIUS_SLACK);
        }
        r
    }
}
