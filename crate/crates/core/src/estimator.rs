//! Minimum error variance estimator of `y(t)` from `w(t), w(t−1), …` for a
//! feedback-free joint model in triangular form.
//!
//! With `D₀ = Q12 Q22⁻¹`:
//!
//! ```text
//! Ã = [A11, A12 − (K12 + K11 D₀) C22; 0, A22 − K22 C22]
//! K̃ = [K12 + K11 D₀; K22]
//! C̃ = [C11, C12 − D₀ C22]
//! ŷ(t) = C̃ x̂(t) + D₀ w(t)
//! ```
//!
//! The direct term enters with a plus sign.

use crate::error::{Error, Result};
use crate::linalg::{self, block2x2, hstack, vstack, Matrix};
use crate::models::{EstimatorModel, InnovationJointModel, TriangularJointModel};
use crate::predictor::LinearPredictor;
use crate::realization::{self, Tolerances};
use crate::series::Series;

/// Samples excluded from reported error statistics by default.
pub const DEFAULT_BURN_IN: usize = 100;

/// `D₀ = Q12 Q22⁻¹`.
pub fn direct_gain(q12: &Matrix, q22: &Matrix) -> Result<Matrix> {
    let chol = q22.clone().cholesky().ok_or(Error::DegenerateInputInnovation)?;
    Ok(chol.solve(&q12.transpose()).transpose())
}

/// Blocks of a triangular joint model that the estimator depends on.
#[derive(Debug, Clone, Copy)]
pub struct EstimatorBlocks<'a> {
    pub a11: &'a Matrix,
    pub a12: &'a Matrix,
    pub a22: &'a Matrix,
    pub k11: &'a Matrix,
    pub k12: &'a Matrix,
    pub k22: &'a Matrix,
    pub c11: &'a Matrix,
    pub c12: &'a Matrix,
    pub c22: &'a Matrix,
}

impl<'a> EstimatorBlocks<'a> {
    pub fn of(t: &'a TriangularJointModel) -> Self {
        Self {
            a11: &t.a11,
            a12: &t.a12,
            a22: &t.a22,
            k11: &t.k11,
            k12: &t.k12,
            k22: &t.k22,
            c11: &t.c11,
            c12: &t.c12,
            c22: &t.c22,
        }
    }

    /// Estimator matrices for a given `D₀`, without validation.
    pub fn estimator(&self, d0: &Matrix) -> EstimatorModel {
        let upper_gain = self.k12 + self.k11 * d0;
        let atil = block2x2(
            self.a11,
            &(self.a12 - &upper_gain * self.c22),
            &Matrix::zeros(self.a22.nrows(), self.a11.ncols()),
            &(self.a22 - self.k22 * self.c22),
        );
        EstimatorModel {
            atil,
            ktil: vstack(&upper_gain, self.k22),
            ctil: hstack(self.c11, &(self.c12 - d0 * self.c22)),
            d0: d0.clone(),
        }
    }
}

pub fn synthesize(t: &TriangularJointModel) -> Result<EstimatorModel> {
    t.validate().into_result()?;
    let d0 = direct_gain(&t.q12, &t.q22)?;
    let est = EstimatorBlocks::of(t).estimator(&d0);
    let radius = linalg::spectral_radius(&est.atil)?;
    if radius >= 1.0 + crate::models::ESTIMATOR_RADIUS_SLACK {
        return Err(Error::Unstable { what: "estimator Atil", radius });
    }
    Ok(est)
}

/// Triangularizes a feedback-free joint model and synthesizes its estimator.
pub fn synthesize_from_joint(m: &InnovationJointModel, tol: Tolerances) -> Result<EstimatorModel> {
    synthesize(&realization::triangularize(m, tol)?)
}

/// Runs the estimator over `w` from `x̂(0) = x0` (zero when absent).
pub fn filter(e: &EstimatorModel, w: &Series, x0: Option<&[f64]>) -> Result<Series> {
    LinearPredictor::from_estimator(e)?.run(w, x0)
}

/// Stationary second-order statistics of the estimation error.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorStatistics {
    /// Covariance of `e_s = e1 − D₀ e2`, the Schur complement of `Q`.
    pub es_cov: Matrix,
    /// Covariance of `y(t) − ŷ(t)` for the stationary estimator.
    pub residual_cov: Matrix,
}

/// Closed-form error statistics of the optimal estimator.
///
/// The error obeys `δ(t+1) = Ã δ(t) + [K11; 0] e_s(t)`,
/// `y(t) − ŷ(t) = C̃ δ(t) + e_s(t)` with `e_s` white, so its covariance is
/// `C̃ Σ C̃ᵀ + S` with `Σ = Ã Σ Ãᵀ + [K11; 0] S [K11; 0]ᵀ`, `S` the Schur
/// complement.
pub fn error_statistics(t: &TriangularJointModel) -> Result<ErrorStatistics> {
    let est = synthesize(t)?;
    let es_cov = linalg::symmetrize(&t.schur_complement()?);
    let g = t.k_e1();
    let sigma = linalg::solve_discrete_lyapunov(&est.atil, &linalg::symmetrize(&(&g * &es_cov * g.transpose())))?;
    let residual_cov = linalg::symmetrize(&(&est.ctil * sigma * est.ctil.transpose() + &es_cov));
    Ok(ErrorStatistics { es_cov, residual_cov })
}
