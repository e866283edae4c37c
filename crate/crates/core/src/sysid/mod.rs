//! Prediction-error identification of the estimator of `y` from `w`.
//!
//! Four parameterizations, with or without prior knowledge of the `w`
//! subsystem `(A22, K22, C22, Q22)`:
//!
//! | case           | identifies                              | estimator from            |
//! |----------------|-----------------------------------------|---------------------------|
//! | `pred_full`    | `(Ã, K̃, C̃, D₀)` directly                | θ                         |
//! | `gen_full`     | joint `(A, K)`, `C = [I 0]`             | triangularize + synthesize|
//! | `pred_partial` | `A11 A12 K11 K12 C11 C12 Q12`           | estimator formulas        |
//! | `gen_partial`  | `A11 A12 K11 K12 C11 C12`               | synthesize                |
//!
//! Predictor cases minimize the estimator MSE `(1/N) Σ |y − ŷ|²`. Generator
//! cases minimize the joint one-step prediction error of `z = (y, w)`, then
//! take `Q` (or its free blocks) from the residual covariance and go through
//! the realization and estimator pipeline. [`Case::GeneratorEntry`] frees a
//! single entry of a known triangular `A` and is fitted by estimator MSE.
//!
//! θ lists the free blocks in the order of the table, each flattened row by
//! row.

pub mod benchmark;
pub mod optimize;

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::estimator::{self, EstimatorBlocks};
use crate::linalg::{self, block, Matrix};
use crate::models::{EstimatorModel, InnovationJointModel, TriangularJointModel};
use crate::predictor::{LinearPredictor, PredictorGradient};
use crate::realization;
use crate::series::Trajectory;
use crate::simulation::derive_seed;

pub use optimize::{BfgsConfig, Minimum, StopReason};

/// Largest admissible spectral radius of a filter matrix during search.
pub const STABILITY_LIMIT: f64 = 1.0 - 1e-6;

/// Weight of the excess spectral radius in [`objective`].
pub const STABILITY_PENALTY: f64 = 1e3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Case {
    PredFull,
    GenFull,
    PredPartial,
    GenPartial,
    /// One entry of `A` in triangular coordinates, everything else known.
    GeneratorEntry { row: usize, col: usize },
}

impl Case {
    /// The four benchmark cases.
    pub const TABLE: [Case; 4] = [Case::PredFull, Case::GenFull, Case::PredPartial, Case::GenPartial];

    pub fn name(&self) -> &'static str {
        match self {
            Case::PredFull => "pred_full",
            Case::GenFull => "gen_full",
            Case::PredPartial => "pred_partial",
            Case::GenPartial => "gen_partial",
            Case::GeneratorEntry { .. } => "generator_entry",
        }
    }

    pub fn from_name(s: &str) -> Option<Case> {
        Case::TABLE.into_iter().find(|c| c.name() == s)
    }

    pub fn is_generator(&self) -> bool {
        matches!(self, Case::GenFull | Case::GenPartial)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Dims {
    pub n: usize,
    pub p1: usize,
    pub p2: usize,
    pub p: usize,
    pub q: usize,
}

/// Known lower subsystem for the partial cases.
#[derive(Debug, Clone, PartialEq)]
pub struct FixedBlocks {
    pub a22: Matrix,
    pub k22: Matrix,
    pub c22: Matrix,
    pub q22: Matrix,
}

impl FixedBlocks {
    pub fn of(t: &TriangularJointModel) -> Self {
        Self { a22: t.a22.clone(), k22: t.k22.clone(), c22: t.c22.clone(), q22: t.q22.clone() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Parameterization {
    pub case: Case,
    pub dims: Dims,
    pub fixed: Option<FixedBlocks>,
    /// Known model for [`Case::GeneratorEntry`].
    pub base: Option<TriangularJointModel>,
    pub theta_dim: usize,
}

/// A decoded parameter vector.
#[derive(Debug, Clone, PartialEq)]
pub enum ParamModel {
    Estimator(EstimatorModel),
    /// Triangular blocks and `Q12`; `Q11` is not identified and left zero.
    PartialEstimator(TriangularJointModel),
    /// Joint `(A, K, C)` without `Q`, in triangular coordinates for
    /// `gen_partial`.
    Generator { a: Matrix, k: Matrix, c: Matrix },
    Entry(TriangularJointModel),
}

pub fn theta_dim(case: Case, d: Dims) -> usize {
    let Dims { n, p1, p2, p, q } = d;
    let gen_partial = p1 * p1 + p1 * p2 + p1 * p + p1 * q + p * p1 + p * p2;
    match case {
        Case::PredFull => n * n + n * q + p * n + p * q,
        Case::GenFull => n * n + n * (p + q),
        Case::GenPartial => gen_partial,
        Case::PredPartial => gen_partial + p * q,
        Case::GeneratorEntry { .. } => 1,
    }
}

pub fn build_parameterization(case: Case, dims: Dims, fixed: Option<FixedBlocks>) -> Result<Parameterization> {
    let Dims { n, p1, p2, p, q } = dims;
    if p == 0 || q == 0 || n == 0 {
        return Err(Error::Dimension(format!("dims n={n}, p={p}, q={q} must be positive")));
    }
    match case {
        Case::GeneratorEntry { .. } => {
            return Err(Error::Dimension("use entry_parameterization for a single entry".into()))
        }
        Case::GenFull if n < p + q => {
            return Err(Error::Dimension(format!("gen_full needs n ≥ p + q, got n={n}, p+q={}", p + q)))
        }
        _ => {}
    }
    if matches!(case, Case::GenFull | Case::PredPartial | Case::GenPartial) && p1 + p2 != n {
        return Err(Error::Dimension(format!("p1 + p2 = {} differs from n = {n}", p1 + p2)));
    }
    let fixed = match case {
        Case::PredPartial | Case::GenPartial => {
            let f = fixed.ok_or(Error::MissingFixedBlocks)?;
            let shapes = [
                ("A22", &f.a22, p2, p2),
                ("K22", &f.k22, p2, q),
                ("C22", &f.c22, q, p2),
                ("Q22", &f.q22, q, q),
            ];
            for (name, m, r, c) in shapes {
                if m.shape() != (r, c) {
                    return Err(Error::Dimension(format!("{name} is {:?}, expected ({r}, {c})", m.shape())));
                }
            }
            Some(f)
        }
        _ => None,
    };
    Ok(Parameterization { case, dims, fixed, base: None, theta_dim: theta_dim(case, dims) })
}

/// Frees `A[row, col]` of a known triangular model. The entry must lie in
/// `A11`, `A12` or `A22`.
pub fn entry_parameterization(base: TriangularJointModel, row: usize, col: usize) -> Result<Parameterization> {
    base.validate().into_result()?;
    let (p1, n) = (base.p1, base.n());
    if row >= n || col >= n || (row >= p1 && col < p1) {
        return Err(Error::Dimension(format!("entry ({row}, {col}) is not a free position of A")));
    }
    let dims = Dims { n, p1, p2: base.p2, p: base.p, q: base.q };
    Ok(Parameterization { case: Case::GeneratorEntry { row, col }, dims, fixed: None, base: Some(base), theta_dim: 1 })
}

struct Reader<'a> {
    theta: &'a [f64],
    pos: usize,
}

impl Reader<'_> {
    fn take(&mut self, rows: usize, cols: usize) -> Matrix {
        let m = Matrix::from_row_slice(rows, cols, &self.theta[self.pos..self.pos + rows * cols]);
        self.pos += rows * cols;
        m
    }
}

fn push(out: &mut Vec<f64>, m: &Matrix) {
    for i in 0..m.nrows() {
        out.extend(m.row(i).iter());
    }
}

/// `[I_{p+q} 0]`, the output matrix held fixed by `gen_full`.
pub fn canonical_output(d: Dims) -> Matrix {
    let out = d.p + d.q;
    let mut c = Matrix::zeros(out, d.n);
    c.view_mut((0, 0), (out, out)).fill_with_identity();
    c
}

impl Parameterization {
    fn fixed(&self) -> &FixedBlocks {
        self.fixed.as_ref().expect("partial cases carry fixed blocks")
    }

    fn base(&self) -> &TriangularJointModel {
        self.base.as_ref().expect("entry case carries its base model")
    }

    fn partial_triangular(&self, r: &mut Reader<'_>, with_q12: bool) -> TriangularJointModel {
        let Dims { p1, p2, p, q, .. } = self.dims;
        let f = self.fixed();
        let a11 = r.take(p1, p1);
        let a12 = r.take(p1, p2);
        let k11 = r.take(p1, p);
        let k12 = r.take(p1, q);
        let c11 = r.take(p, p1);
        let c12 = r.take(p, p2);
        let q12 = if with_q12 { r.take(p, q) } else { Matrix::zeros(p, q) };
        TriangularJointModel {
            a11,
            a12,
            a22: f.a22.clone(),
            k11,
            k12,
            k22: f.k22.clone(),
            c11,
            c12,
            c22: f.c22.clone(),
            q11: Matrix::zeros(p, p),
            q12,
            q22: f.q22.clone(),
            t: Matrix::identity(p1 + p2, p1 + p2),
            p1,
            p2,
            p,
            q,
        }
    }

    pub fn decode(&self, theta: &[f64]) -> Result<ParamModel> {
        if theta.len() != self.theta_dim {
            return Err(Error::Dimension(format!("θ has {} entries, expected {}", theta.len(), self.theta_dim)));
        }
        if theta.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { what: "parameter vector" });
        }
        let Dims { n, p, q, .. } = self.dims;
        let mut r = Reader { theta, pos: 0 };
        Ok(match self.case {
            Case::PredFull => ParamModel::Estimator(EstimatorModel {
                atil: r.take(n, n),
                ktil: r.take(n, q),
                ctil: r.take(p, n),
                d0: r.take(p, q),
            }),
            Case::GenFull => {
                ParamModel::Generator { a: r.take(n, n), k: r.take(n, p + q), c: canonical_output(self.dims) }
            }
            Case::PredPartial => ParamModel::PartialEstimator(self.partial_triangular(&mut r, true)),
            Case::GenPartial => {
                let t = self.partial_triangular(&mut r, false);
                ParamModel::Generator { a: t.a(), k: t.k(), c: t.c() }
            }
            Case::GeneratorEntry { row, col } => {
                let mut t = self.base().clone();
                set_a_entry(&mut t, row, col, theta[0]);
                ParamModel::Entry(t)
            }
        })
    }

    pub fn encode(&self, m: &ParamModel) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(self.theta_dim);
        let Dims { p1, p, .. } = self.dims;
        match (self.case, m) {
            (Case::PredFull, ParamModel::Estimator(e)) => {
                for blk in [&e.atil, &e.ktil, &e.ctil, &e.d0] {
                    push(&mut out, blk);
                }
            }
            (Case::GenFull, ParamModel::Generator { a, k, .. }) => {
                push(&mut out, a);
                push(&mut out, k);
            }
            (Case::PredPartial, ParamModel::PartialEstimator(t)) => {
                for blk in [&t.a11, &t.a12, &t.k11, &t.k12, &t.c11, &t.c12, &t.q12] {
                    push(&mut out, blk);
                }
            }
            (Case::GenPartial, ParamModel::Generator { a, k, c }) => {
                let n = self.dims.n;
                let p2 = self.dims.p2;
                let q = self.dims.q;
                for blk in [
                    block(a, 0, 0, p1, p1),
                    block(a, 0, p1, p1, p2),
                    block(k, 0, 0, p1, p),
                    block(k, 0, p, p1, q),
                    block(c, 0, 0, p, p1),
                    block(c, 0, p1, p, n - p1),
                ] {
                    push(&mut out, &blk);
                }
            }
            (Case::GeneratorEntry { row, col }, ParamModel::Entry(t)) => out.push(t.a()[(row, col)]),
            _ => return Err(Error::Dimension(format!("model kind does not match case {}", self.case.name()))),
        }
        if out.len() != self.theta_dim {
            return Err(Error::Dimension(format!("encoded {} parameters, expected {}", out.len(), self.theta_dim)));
        }
        Ok(out)
    }

    /// Parameters of a known triangular model (`T = I` coordinates). Not
    /// available for `gen_full`, whose `C` is canonical.
    pub fn encode_triangular(&self, t: &TriangularJointModel) -> Result<Vec<f64>> {
        let m = match self.case {
            Case::PredFull => ParamModel::Estimator(estimator::synthesize(t)?),
            Case::PredPartial => ParamModel::PartialEstimator(t.clone()),
            Case::GenPartial => ParamModel::Generator { a: t.a(), k: t.k(), c: t.c() },
            Case::GeneratorEntry { .. } => ParamModel::Entry(t.clone()),
            Case::GenFull => return Err(Error::Dimension("gen_full uses a canonical output matrix".into())),
        };
        self.encode(&m)
    }
}

fn set_a_entry(t: &mut TriangularJointModel, row: usize, col: usize, value: f64) {
    let p1 = t.p1;
    match (row < p1, col < p1) {
        (true, true) => t.a11[(row, col)] = value,
        (true, false) => t.a12[(row, col - p1)] = value,
        (false, false) => t.a22[(row - p1, col - p1)] = value,
        (false, true) => unreachable!("lower-left entries are rejected at construction"),
    }
}

/// Which stage produced the identified estimator.
#[derive(Debug, Clone, PartialEq)]
pub enum IdentifiedModel {
    Estimator(EstimatorModel),
    Joint(InnovationJointModel),
    Triangular(TriangularJointModel),
}

/// Estimator for a decoded parameter vector.
///
/// Generator cases estimate `Q` from the one-step residuals of the joint
/// predictor on `data`; `gen_full` is then triangularized with the known
/// `p2`, dropping whatever lower-left coupling the fit left and scaling a
/// diagonal block back to radius `1 − 1e-6` if that made it unstable.
pub fn estimator_for(par: &Parameterization, m: &ParamModel, data: &Trajectory) -> Result<(IdentifiedModel, EstimatorModel)> {
    match m {
        ParamModel::Estimator(e) => Ok((IdentifiedModel::Estimator(e.clone()), e.clone())),
        ParamModel::PartialEstimator(t) => {
            let d0 = estimator::direct_gain(&t.q12, &t.q22)?;
            Ok((IdentifiedModel::Triangular(t.clone()), EstimatorBlocks::of(t).estimator(&d0)))
        }
        ParamModel::Entry(t) => Ok((IdentifiedModel::Triangular(t.clone()), estimator::synthesize(t)?)),
        ParamModel::Generator { a, k, c } => {
            let Dims { p1, p2, p, q, .. } = par.dims;
            let cov = residual_covariance(a, k, c, data)?;
            match par.case {
                Case::GenFull => {
                    let joint = InnovationJointModel { a: a.clone(), k: k.clone(), c: c.clone(), cov, p, q };
                    let (mut tri, _) = realization::triangularize_with_partition(&joint, p2)?;
                    // Dropping the lower-left coupling can push a diagonal
                    // block out of the unit disc; scale it back to the limit.
                    for blk in [&mut tri.a11, &mut tri.a22] {
                        let radius = linalg::spectral_radius(blk)?;
                        if radius >= STABILITY_LIMIT {
                            *blk *= STABILITY_LIMIT / radius;
                        }
                    }
                    let est = estimator::synthesize(&tri)?;
                    Ok((IdentifiedModel::Joint(joint), est))
                }
                _ => {
                    let mut cov = cov;
                    cov.view_mut((p, p), (q, q)).copy_from(&par.fixed().q22);
                    let joint = InnovationJointModel { a: a.clone(), k: k.clone(), c: c.clone(), cov, p, q };
                    let t = TriangularJointModel::extract(&joint, p1, Matrix::identity(p1 + p2, p1 + p2))?;
                    let est = estimator::synthesize(&t)?;
                    Ok((IdentifiedModel::Triangular(t), est))
                }
            }
        }
    }
}

/// `(1/N) Σ ε εᵀ` of the joint one-step residuals `ε = z − C x`.
pub fn residual_covariance(a: &Matrix, k: &Matrix, c: &Matrix, data: &Trajectory) -> Result<Matrix> {
    let z = data.joint();
    let zhat = joint_predictor(a, k, c)?.run(&z, None)?;
    let mut cov = Matrix::zeros(z.dim(), z.dim());
    for (zt, ht) in z.rows().zip(zhat.rows()) {
        let r = nalgebra::DVector::from_iterator(zt.len(), zt.iter().zip(ht).map(|(a, b)| a - b));
        cov += &r * r.transpose();
    }
    Ok(linalg::symmetrize(&(cov / z.len().max(1) as f64)))
}

/// One-step predictor of `z` for the joint model: `F = A − K C`, `G = K`,
/// `H = C`, `J = 0`.
fn joint_predictor(a: &Matrix, k: &Matrix, c: &Matrix) -> Result<LinearPredictor> {
    LinearPredictor::new(&(a - k * c), k, c, &Matrix::zeros(c.nrows(), k.ncols()))
}

/// Estimator MSE on `data` with the stability barrier: when `ρ(Ã) ≥ 1 − 1e-6`
/// the MSE is taken at `Ã` scaled back to that radius, plus
/// `10³ · (ρ − (1 − 1e-6))`. Any failure yields `+∞`.
pub fn objective(par: &Parameterization, theta: &[f64], data: &Trajectory) -> f64 {
    try_objective(par, theta, data).unwrap_or(f64::INFINITY)
}

fn try_objective(par: &Parameterization, theta: &[f64], data: &Trajectory) -> Result<f64> {
    let m = par.decode(theta)?;
    let (_, est) = estimator_for(par, &m, data)?;
    estimator_mse_with_barrier(&est, data)
}

pub fn estimator_mse_with_barrier(est: &EstimatorModel, data: &Trajectory) -> Result<f64> {
    let radius = linalg::spectral_radius(&est.atil)?;
    let (atil, penalty) = if radius >= STABILITY_LIMIT {
        (&est.atil * (STABILITY_LIMIT / radius), STABILITY_PENALTY * (radius - STABILITY_LIMIT))
    } else {
        (est.atil.clone(), 0.0)
    };
    let pred = LinearPredictor::new(&atil, &est.ktil, &est.ctil, &est.d0)?;
    Ok(pred.mse(&data.w, &data.y, 0)? + penalty)
}

/// The loss the optimizer minimizes and its gradient, or `None` outside the
/// stable region.
pub fn fit_loss(par: &Parameterization, theta: &[f64], data: &Trajectory) -> Option<(f64, Vec<f64>)> {
    let m = par.decode(theta).ok()?;
    match &m {
        ParamModel::Generator { a, k, c } => {
            if !stable(a) {
                return None;
            }
            let f = a - k * c;
            if !stable(&f) {
                return None;
            }
            let z = data.joint();
            let pred = joint_predictor(a, k, c).ok()?;
            let (loss, g) = pred.mse_with_gradient(&z, &z).ok()?;
            let ga = g.f.clone();
            let gk = &g.g - &g.f * c.transpose();
            let gc = &g.h - k.transpose() * &g.f;
            let grad = match par.case {
                Case::GenFull => {
                    let mut out = Vec::with_capacity(par.theta_dim);
                    push(&mut out, &ga);
                    push(&mut out, &gk);
                    out
                }
                _ => par
                    .encode(&ParamModel::Generator { a: ga, k: gk, c: gc })
                    .ok()?,
            };
            Some((loss, grad))
        }
        _ => {
            let (_, est) = estimator_for(par, &m, data).ok()?;
            if !stable(&est.atil) {
                return None;
            }
            let pred = LinearPredictor::from_estimator(&est).ok()?;
            let (loss, g) = pred.mse_with_gradient(&data.w, &data.y).ok()?;
            Some((loss, chain_estimator_gradient(par, &m, &g)?))
        }
    }
}

fn stable(m: &Matrix) -> bool {
    linalg::spectral_radius(m).is_ok_and(|r| r < STABILITY_LIMIT)
}

/// Maps the gradient with respect to `(Ã, K̃, C̃, D₀)` to θ.
fn chain_estimator_gradient(par: &Parameterization, m: &ParamModel, g: &PredictorGradient) -> Option<Vec<f64>> {
    let mut out = Vec::with_capacity(par.theta_dim);
    match (par.case, m) {
        (Case::PredFull, _) => {
            for blk in [&g.f, &g.g, &g.h, &g.j] {
                push(&mut out, blk);
            }
        }
        (Case::PredPartial, ParamModel::PartialEstimator(t)) => {
            let Dims { p1, p2, p, q, .. } = par.dims;
            let d0 = estimator::direct_gain(&t.q12, &t.q22).ok()?;
            let gf11 = block(&g.f, 0, 0, p1, p1);
            let gf12 = block(&g.f, 0, p1, p1, p2);
            let gg1 = block(&g.g, 0, 0, p1, q);
            let gh1 = block(&g.h, 0, 0, p, p1);
            let gh2 = block(&g.h, 0, p1, p, p2);
            // Ã12 = A12 − M C22, K̃1 = M with M = K12 + K11 D₀,
            // C̃2 = C12 − D₀ C22, J = D₀ = Q12 Q22⁻¹.
            let gm = &gg1 - &gf12 * t.c22.transpose();
            let gk11 = &gm * d0.transpose();
            let gd0 = &g.j - &gh2 * t.c22.transpose() + t.k11.transpose() * &gm;
            let gq12 = t.q22.clone().cholesky()?.solve(&gd0.transpose()).transpose();
            for blk in [&gf11, &gf12, &gk11, &gm, &gh1, &gh2, &gq12] {
                push(&mut out, blk);
            }
        }
        (Case::GeneratorEntry { row, col }, _) => out.push(g.f[(row, col)]),
        _ => return None,
    }
    Some(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct IdentifyConfig {
    pub restarts: usize,
    /// Standard deviation of the random starting points around zero.
    pub init_scale: f64,
    /// Extra starting point tried before the random ones.
    pub initial: Option<Vec<f64>>,
    pub seed: u64,
    pub bfgs: BfgsConfig,
}

impl Default for IdentifyConfig {
    fn default() -> Self {
        Self { restarts: 5, init_scale: 0.1, initial: None, seed: 0, bfgs: BfgsConfig::default() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StartReport {
    pub loss: Option<f64>,
    pub iterations: usize,
    pub reason: Option<StopReason>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub case: Case,
    pub theta: Vec<f64>,
    pub model: IdentifiedModel,
    pub estimator: EstimatorModel,
    /// Estimator MSE on the training data, from [`objective`].
    pub training_mse: f64,
    /// Final value of the fitted loss.
    pub fit_loss: f64,
    pub iterations: usize,
    pub converged: bool,
    pub restarts_used: usize,
    pub starts: Vec<StartReport>,
    /// Fewer samples than parameters.
    pub overparameterized: bool,
}

/// Multi-start BFGS on [`fit_loss`]; keeps the lowest loss among the starts
/// whose model yields a valid estimator.
pub fn identify(par: &Parameterization, data: &Trajectory, cfg: &IdentifyConfig) -> Result<FitResult> {
    data.check()?;
    let Dims { p, q, .. } = par.dims;
    if data.y.dim() != p || data.w.dim() != q {
        return Err(Error::Dimension(format!(
            "data has p={}, q={}; parameterization expects p={p}, q={q}",
            data.y.dim(),
            data.w.dim()
        )));
    }
    if data.is_empty() {
        return Err(Error::Empty { what: "training data" });
    }
    let mut starts: Vec<Vec<f64>> = Vec::new();
    if let Some(x0) = &cfg.initial {
        if x0.len() != par.theta_dim {
            return Err(Error::Dimension(format!("initial θ has {} entries, expected {}", x0.len(), par.theta_dim)));
        }
        starts.push(x0.clone());
    }
    for k in 0..cfg.restarts {
        let mut rng = ChaCha20Rng::seed_from_u64(derive_seed(cfg.seed, k as u64));
        let theta: Vec<f64> = (0..par.theta_dim)
            .map(|_| {
                let z: f64 = StandardNormal.sample(&mut rng);
                cfg.init_scale * z
            })
            .collect();
        starts.push(theta);
    }
    let mut reports = Vec::with_capacity(starts.len());
    let mut minima: Vec<Minimum> = Vec::new();
    for x0 in &starts {
        match optimize::minimize(|th| fit_loss(par, th, data), x0, &cfg.bfgs) {
            Some(m) => {
                reports.push(StartReport { loss: Some(m.f), iterations: m.iterations, reason: Some(m.reason) });
                minima.push(m);
            }
            None => reports.push(StartReport { loss: None, iterations: 0, reason: None }),
        }
    }
    let fail = |reason: String| Error::IdentificationFailure { starts: starts.len(), reason };
    if minima.is_empty() {
        return Err(fail("no starting point lies in the stable region".into()));
    }
    minima.sort_by(|a, b| a.f.total_cmp(&b.f));
    // The best start whose model yields a valid estimator.
    let mut last_error = None;
    for best in minima {
        let m = par.decode(&best.x)?;
        let (model, est) = match estimator_for(par, &m, data) {
            Ok(v) => v,
            Err(e) => {
                last_error = Some(e);
                continue;
            }
        };
        let training_mse = estimator_mse_with_barrier(&est, data)?;
        return Ok(FitResult {
            case: par.case,
            theta: best.x.clone(),
            model,
            estimator: est,
            training_mse,
            fit_loss: best.f,
            iterations: reports.iter().map(|r| r.iterations).sum(),
            converged: best.converged(),
            restarts_used: starts.len(),
            starts: reports,
            overparameterized: data.len() <= par.theta_dim,
        });
    }
    Err(fail(last_error.map(|e| format!("{e}")).unwrap_or_default()))
}

/// Validation statistics of an estimator: MSE and per-component VAF of
/// `y − ŷ` after dropping `burn_in` samples, filtering from `x̂(0) = 0`.
pub fn validate_estimator(est: &EstimatorModel, data: &Trajectory, burn_in: usize) -> Result<(f64, Vec<f64>)> {
    let yhat = estimator::filter(est, &data.w, None)?;
    let y = data.y.skip(burn_in);
    let yhat = yhat.skip(burn_in);
    Ok((crate::metrics::mse(&y, &yhat)?, crate::metrics::vaf_components(&y, &yhat)?))
}

#[cfg(test)]
mod tests;
