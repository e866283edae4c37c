//! General driven model → joint innovation form → block-triangular form.
//!
//! The partition size `p2` is the numerical rank of the observability matrix
//! of `(A, C_w)`. The similarity is `T = Vᵀ` from its SVD with singular values
//! ascending, so the leading `p1 = n − p2` coordinates span the directions
//! `w` cannot see. `w` is feedback free from `y` exactly when the
//! lower-left blocks of the transformed `(A, K, C)` vanish; numerically, when
//! each block's Frobenius norm relative to `1 + ‖full matrix‖_F` is at most
//! `tol_fb`.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::{self, block, Matrix, RiccatiSolution};
use crate::models::{InnovationJointModel, StateSpaceModel, TriangularJointModel};

/// Tolerances of the triangularization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Relative singular value threshold for numerical rank.
    pub rank_tol: f64,
    /// Relative bound on lower-left blocks for the feedback-free test.
    pub tol_fb: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { rank_tol: 1e-6, tol_fb: 1e-6 }
    }
}

/// Result of [`to_innovation_form`] with the intermediate quantities.
#[derive(Debug, Clone, PartialEq)]
pub struct InnovationFormSolution {
    pub model: InnovationJointModel,
    /// State covariance `P = A P Aᵀ + B Bᵀ`.
    pub state_cov: Matrix,
    /// `C̄ = C P Aᵀ + D Bᵀ`.
    pub cbar: Matrix,
    /// Output covariance `Λ₀ = C P Cᵀ + D Dᵀ`.
    pub lambda0: Matrix,
    pub riccati: RiccatiSolution,
}

pub fn to_innovation_form(m: &StateSpaceModel) -> Result<InnovationFormSolution> {
    m.validate().into_result()?;
    let (a, b, c, d) = (&m.a, &m.b, &m.c, &m.d);
    let state_cov = linalg::solve_discrete_lyapunov(a, &linalg::symmetrize(&(b * b.transpose())))?;
    let cbar = c * &state_cov * a.transpose() + d * b.transpose();
    let lambda0 = linalg::symmetrize(&(c * &state_cov * c.transpose() + d * d.transpose()));
    let riccati = linalg::solve_innovation_riccati(a, c, &cbar, &lambda0)?;
    let min_eigenvalue = linalg::min_symmetric_eigenvalue(&riccati.delta)?;
    if min_eigenvalue <= 0.0 {
        return Err(Error::DegenerateSpectrum { min_eigenvalue });
    }
    let model = InnovationJointModel {
        a: a.clone(),
        k: riccati.gain.clone(),
        c: c.clone(),
        cov: riccati.delta.clone(),
        p: m.p,
        q: m.q,
    };
    model.validate().into_result()?;
    Ok(InnovationFormSolution { model, state_cov, cbar, lambda0, riccati })
}

/// `[C_w; C_w A; …; C_w A^{n−1}]`.
pub fn observability_matrix(a: &Matrix, cw: &Matrix) -> Matrix {
    let n = a.nrows();
    let q = cw.nrows();
    let mut out = Matrix::zeros(n * q, n);
    let mut row = cw.clone();
    for k in 0..n {
        out.view_mut((k * q, 0), (q, n)).copy_from(&row);
        row = &row * a;
    }
    out
}

/// Outcome of the feedback-free test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeedbackReport {
    pub free: bool,
    pub residual: f64,
    pub p1: usize,
    pub p2: usize,
}

pub fn check_feedback_free(m: &InnovationJointModel, tol: Tolerances) -> Result<FeedbackReport> {
    let split = Split::compute(m, tol.rank_tol, None)?;
    Ok(FeedbackReport {
        free: split.residual <= tol.tol_fb,
        residual: split.residual,
        p1: split.p1,
        p2: m.n() - split.p1,
    })
}

/// Block-triangular form of a feedback-free joint model.
pub fn triangularize(m: &InnovationJointModel, tol: Tolerances) -> Result<TriangularJointModel> {
    m.validate().into_result()?;
    let split = Split::compute(m, tol.rank_tol, None)?;
    if split.residual > tol.tol_fb {
        return Err(Error::FeedbackViolation { residual: split.residual, tol: tol.tol_fb });
    }
    let tri = split.into_triangular(m)?;
    check_lower_observable(&tri, tol.rank_tol)?;
    Ok(tri)
}

/// Triangular form with a prescribed lower order `p2`, zeroing the
/// lower-left blocks whatever their size. Returns the discarded residual.
///
/// This is the projection onto the nearest feedback-free structure in the
/// SVD coordinates, used for identified models that are feedback free only
/// approximately.
pub fn triangularize_with_partition(
    m: &InnovationJointModel,
    p2: usize,
) -> Result<(TriangularJointModel, f64)> {
    if p2 > m.n() {
        return Err(Error::Dimension(alloc::format!("p2 = {p2} exceeds order {}", m.n())));
    }
    let split = Split::compute(m, 0.0, Some(p2))?;
    let residual = split.residual;
    Ok((split.into_triangular(m)?, residual))
}

struct Split {
    t: Matrix,
    a: Matrix,
    k: Matrix,
    c: Matrix,
    p1: usize,
    residual: f64,
}

impl Split {
    fn compute(m: &InnovationJointModel, rank_tol: f64, p2: Option<usize>) -> Result<Split> {
        let n = m.n();
        let obs = observability_matrix(&m.a, &m.c_w());
        let dec = linalg::svd(&obs)?;
        let p2 = p2.unwrap_or_else(|| dec.rank(rank_tol));
        let p1 = n - p2;
        // Observability matrix has n·q ≥ n rows, so V is square.
        let v = dec.v;
        let t = v.transpose();
        let a = &t * &m.a * &v;
        let k = &t * &m.k;
        let c = &m.c * &v;
        let (p, q) = (m.p, m.q);
        let rel = |blk: Matrix, full: &Matrix| blk.norm() / (1.0 + full.norm());
        let residual = [
            rel(block(&a, p1, 0, p2, p1), &a),
            rel(block(&k, p1, 0, p2, p), &k),
            rel(block(&c, p, 0, q, p1), &c),
        ]
        .into_iter()
        .fold(0.0, f64::max);
        Ok(Split { t, a, k, c, p1, residual })
    }

    fn into_triangular(mut self, m: &InnovationJointModel) -> Result<TriangularJointModel> {
        let n = m.n();
        let (p1, p2, p, q) = (self.p1, n - self.p1, m.p, m.q);
        self.a.view_mut((p1, 0), (p2, p1)).fill(0.0);
        self.k.view_mut((p1, 0), (p2, p)).fill(0.0);
        self.c.view_mut((p, 0), (q, p1)).fill(0.0);
        let transformed = InnovationJointModel {
            a: self.a,
            k: self.k,
            c: self.c,
            cov: m.cov.clone(),
            p,
            q,
        };
        TriangularJointModel::extract(&transformed, p1, self.t)
    }
}

fn check_lower_observable(t: &TriangularJointModel, rank_tol: f64) -> Result<()> {
    if t.p2 == 0 {
        return Ok(());
    }
    let rank = linalg::svd(&observability_matrix(&t.a22, &t.c22))?.rank(rank_tol);
    if rank < t.p2 {
        return Err(Error::Dimension(alloc::format!(
            "(A22, C22) has observability rank {rank}, expected {}",
            t.p2
        )));
    }
    Ok(())
}

/// Output covariances `Λ_k = E[z(t+k) z(t)ᵀ]`, `k = 0..count`, of a joint
/// innovation model, from its stationary state covariance.
pub fn output_covariances(m: &InnovationJointModel, count: usize) -> Result<Vec<Matrix>> {
    let kq = &m.k * &m.cov;
    let state = linalg::solve_discrete_lyapunov(&m.a, &linalg::symmetrize(&(&kq * m.k.transpose())))?;
    let lambda0 = &m.c * &state * m.c.transpose() + &m.cov;
    let cross_t = &m.a * &state * m.c.transpose() + kq;
    Ok(lagged_covariances(&m.a, &m.c, &cross_t, lambda0, count))
}

/// Same sequence for a driven model `(A, B, C, D)`.
pub fn state_space_output_covariances(m: &StateSpaceModel, count: usize) -> Result<Vec<Matrix>> {
    let state = linalg::solve_discrete_lyapunov(&m.a, &linalg::symmetrize(&(&m.b * m.b.transpose())))?;
    let lambda0 = &m.c * &state * m.c.transpose() + &m.d * m.d.transpose();
    let cross_t = &m.a * &state * m.c.transpose() + &m.b * m.d.transpose();
    Ok(lagged_covariances(&m.a, &m.c, &cross_t, lambda0, count))
}

fn lagged_covariances(a: &Matrix, c: &Matrix, cross_t: &Matrix, lambda0: Matrix, count: usize) -> Vec<Matrix> {
    let mut out = Vec::with_capacity(count);
    if count == 0 {
        return out;
    }
    out.push(lambda0);
    let mut chain = cross_t.clone();
    for _ in 1..count {
        out.push(c * &chain);
        chain = a * chain;
    }
    out
}
