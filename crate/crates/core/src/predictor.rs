//! Allocation-free runner for `x(t+1) = F x(t) + G u(t)`,
//! `ŷ(t) = H x(t) + J u(t)`, with the exact gradient of the mean squared
//! output error by a reverse (adjoint) sweep.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::models::EstimatorModel;
use crate::series::Series;

/// Linear predictor with row-major copies of its matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearPredictor {
    n: usize,
    m: usize,
    r: usize,
    f: Vec<f64>,
    g: Vec<f64>,
    h: Vec<f64>,
    j: Vec<f64>,
}

/// Gradient of the loss with respect to each predictor matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictorGradient {
    pub f: Matrix,
    pub g: Matrix,
    pub h: Matrix,
    pub j: Matrix,
}

fn row_major(m: &Matrix) -> Vec<f64> {
    m.transpose().as_slice().to_vec()
}

#[inline]
fn matvec_acc(out: &mut [f64], mat: &[f64], x: &[f64]) {
    let cols = x.len();
    for (i, o) in out.iter_mut().enumerate() {
        let row = &mat[i * cols..(i + 1) * cols];
        *o += row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
    }
}

/// `out += matᵀ y` for row-major `mat` with `y.len()` rows.
#[inline]
fn matvec_t_acc(out: &mut [f64], mat: &[f64], y: &[f64]) {
    let cols = out.len();
    for (i, &yi) in y.iter().enumerate() {
        if yi == 0.0 {
            continue;
        }
        let row = &mat[i * cols..(i + 1) * cols];
        for (o, a) in out.iter_mut().zip(row) {
            *o += a * yi;
        }
    }
}

#[inline]
fn outer_acc(acc: &mut [f64], a: &[f64], b: &[f64]) {
    let cols = b.len();
    for (i, &ai) in a.iter().enumerate() {
        if ai == 0.0 {
            continue;
        }
        let row = &mut acc[i * cols..(i + 1) * cols];
        for (r, bj) in row.iter_mut().zip(b) {
            *r += ai * bj;
        }
    }
}

impl LinearPredictor {
    pub fn new(f: &Matrix, g: &Matrix, h: &Matrix, j: &Matrix) -> Result<Self> {
        let n = f.nrows();
        let m = g.ncols();
        let r = h.nrows();
        if f.ncols() != n || g.nrows() != n || h.ncols() != n || j.shape() != (r, m) {
            return Err(Error::Dimension(alloc::format!(
                "predictor shapes F {:?}, G {:?}, H {:?}, J {:?}",
                f.shape(),
                g.shape(),
                h.shape(),
                j.shape()
            )));
        }
        Ok(Self { n, m, r, f: row_major(f), g: row_major(g), h: row_major(h), j: row_major(j) })
    }

    pub fn from_estimator(e: &EstimatorModel) -> Result<Self> {
        Self::new(&e.atil, &e.ktil, &e.ctil, &e.d0)
    }

    pub fn state_dim(&self) -> usize {
        self.n
    }

    pub fn input_dim(&self) -> usize {
        self.m
    }

    pub fn output_dim(&self) -> usize {
        self.r
    }

    fn check_input(&self, u: &Series) -> Result<()> {
        if u.dim() != self.m {
            return Err(Error::Dimension(alloc::format!(
                "input has {} channels, predictor expects {}",
                u.dim(),
                self.m
            )));
        }
        Ok(())
    }

    fn initial_state(&self, x0: Option<&[f64]>) -> Result<Vec<f64>> {
        match x0 {
            None => Ok(vec![0.0; self.n]),
            Some(x) if x.len() == self.n => Ok(x.to_vec()),
            Some(x) => Err(Error::Dimension(alloc::format!(
                "initial state has {} entries, expected {}",
                x.len(),
                self.n
            ))),
        }
    }

    /// Output sequence from `x(0) = x0` (zero when absent).
    pub fn run(&self, u: &Series, x0: Option<&[f64]>) -> Result<Series> {
        self.check_input(u)?;
        let mut x = self.initial_state(x0)?;
        let mut next = vec![0.0; self.n];
        let mut out = Series::zeros(self.r, u.len());
        for t in 0..u.len() {
            let ut = u.row(t);
            let yt = out.row_mut(t);
            matvec_acc(yt, &self.h, &x);
            matvec_acc(yt, &self.j, ut);
            next.iter_mut().for_each(|v| *v = 0.0);
            matvec_acc(&mut next, &self.f, &x);
            matvec_acc(&mut next, &self.g, ut);
            core::mem::swap(&mut x, &mut next);
        }
        Ok(out)
    }

    /// `(1/N') Σ ‖target(t) − ŷ(t)‖²` over `t ≥ burn_in`, with `x(0) = 0`.
    pub fn mse(&self, u: &Series, target: &Series, burn_in: usize) -> Result<f64> {
        self.check_target(u, target)?;
        let len = u.len();
        if burn_in >= len {
            return Err(Error::Empty { what: "samples after burn-in" });
        }
        let mut x = vec![0.0; self.n];
        let mut next = vec![0.0; self.n];
        let mut yhat = vec![0.0; self.r];
        let mut sum = 0.0;
        for t in 0..len {
            let ut = u.row(t);
            if t >= burn_in {
                yhat.iter_mut().for_each(|v| *v = 0.0);
                matvec_acc(&mut yhat, &self.h, &x);
                matvec_acc(&mut yhat, &self.j, ut);
                sum += yhat.iter().zip(target.row(t)).map(|(a, b)| (b - a) * (b - a)).sum::<f64>();
            }
            next.iter_mut().for_each(|v| *v = 0.0);
            matvec_acc(&mut next, &self.f, &x);
            matvec_acc(&mut next, &self.g, ut);
            core::mem::swap(&mut x, &mut next);
        }
        Ok(sum / (len - burn_in) as f64)
    }

    fn check_target(&self, u: &Series, target: &Series) -> Result<()> {
        self.check_input(u)?;
        if target.dim() != self.r || target.len() != u.len() {
            return Err(Error::Dimension(alloc::format!(
                "target is {}x{}, expected {}x{}",
                target.len(),
                target.dim(),
                u.len(),
                self.r
            )));
        }
        if u.is_empty() {
            return Err(Error::Empty { what: "input series" });
        }
        Ok(())
    }

    /// Mean squared error over all samples from `x(0) = 0` and its gradient.
    pub fn mse_with_gradient(&self, u: &Series, target: &Series) -> Result<(f64, PredictorGradient)> {
        self.check_target(u, target)?;
        let (n, m, r) = (self.n, self.m, self.r);
        let len = u.len();
        let mut states = vec![0.0; n * len];
        let mut resid = vec![0.0; r * len];
        let mut next = vec![0.0; n];
        let mut yhat = vec![0.0; r];
        let mut sum = 0.0;
        for t in 0..len {
            let ut = u.row(t);
            let (done, rest) = states.split_at_mut((t + 1) * n);
            let x = &done[t * n..];
            let rt = &mut resid[t * r..(t + 1) * r];
            rt.copy_from_slice(target.row(t));
            yhat.iter_mut().for_each(|v| *v = 0.0);
            matvec_acc(&mut yhat, &self.h, x);
            matvec_acc(&mut yhat, &self.j, ut);
            for (ri, yi) in rt.iter_mut().zip(&yhat) {
                *ri -= yi;
                sum += *ri * *ri;
            }
            if t + 1 < len {
                next.iter_mut().for_each(|v| *v = 0.0);
                matvec_acc(&mut next, &self.f, x);
                matvec_acc(&mut next, &self.g, ut);
                rest[..n].copy_from_slice(&next);
            }
        }
        let scale = -2.0 / len as f64;
        let mut gf = vec![0.0; n * n];
        let mut gg = vec![0.0; n * m];
        let mut gh = vec![0.0; r * n];
        let mut gj = vec![0.0; r * m];
        let mut lambda_next = vec![0.0; n];
        let mut lambda = vec![0.0; n];
        let mut gy = vec![0.0; r];
        for t in (0..len).rev() {
            let x = &states[t * n..(t + 1) * n];
            let ut = u.row(t);
            for (g, res) in gy.iter_mut().zip(&resid[t * r..(t + 1) * r]) {
                *g = scale * res;
            }
            outer_acc(&mut gf, &lambda_next, x);
            outer_acc(&mut gg, &lambda_next, ut);
            outer_acc(&mut gh, &gy, x);
            outer_acc(&mut gj, &gy, ut);
            lambda.iter_mut().for_each(|v| *v = 0.0);
            matvec_t_acc(&mut lambda, &self.h, &gy);
            matvec_t_acc(&mut lambda, &self.f, &lambda_next);
            core::mem::swap(&mut lambda, &mut lambda_next);
        }
        let grad = PredictorGradient {
            f: Matrix::from_row_slice(n, n, &gf),
            g: Matrix::from_row_slice(n, m, &gg),
            h: Matrix::from_row_slice(r, n, &gh),
            j: Matrix::from_row_slice(r, m, &gj),
        };
        Ok((sum / len as f64, grad))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn random(rng: &mut ChaCha8Rng, r: usize, c: usize, s: f64) -> Matrix {
        Matrix::from_fn(r, c, |_, _| s * rng.sample::<f64, _>(StandardNormal))
    }

    fn random_series(rng: &mut ChaCha8Rng, dim: usize, len: usize) -> Series {
        Series::new(dim, (0..dim * len).map(|_| rng.sample(StandardNormal)).collect()).unwrap()
    }

    #[test]
    fn run_matches_dense_recursion() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (f, g, h, j) = (random(&mut rng, 3, 3, 0.3), random(&mut rng, 3, 2, 1.0), random(&mut rng, 2, 3, 1.0), random(&mut rng, 2, 2, 1.0));
        let pred = LinearPredictor::new(&f, &g, &h, &j).unwrap();
        let u = random_series(&mut rng, 2, 20);
        let x0 = [0.1, -0.2, 0.3];
        let out = pred.run(&u, Some(&x0)).unwrap();
        let mut x = nalgebra::DVector::from_column_slice(&x0);
        for t in 0..20 {
            let ut = nalgebra::DVector::from_column_slice(u.row(t));
            let y = &h * &x + &j * &ut;
            for i in 0..2 {
                assert!((y[i] - out.row(t)[i]).abs() < 1e-12);
            }
            x = &f * &x + &g * &ut;
        }
    }

    #[test]
    fn adjoint_gradient_matches_central_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let (f, g, h, j) = (random(&mut rng, 3, 3, 0.3), random(&mut rng, 3, 2, 1.0), random(&mut rng, 2, 3, 1.0), random(&mut rng, 2, 2, 1.0));
        let u = random_series(&mut rng, 2, 40);
        let target = random_series(&mut rng, 2, 40);
        let pred = LinearPredictor::new(&f, &g, &h, &j).unwrap();
        let (loss, grad) = pred.mse_with_gradient(&u, &target).unwrap();
        assert!((loss - pred.mse(&u, &target, 0).unwrap()).abs() < 1e-12);
        let eps = 1e-6;
        let mats = [&f, &g, &h, &j];
        let grads = [&grad.f, &grad.g, &grad.h, &grad.j];
        for which in 0..4 {
            let base = mats[which];
            for idx in 0..base.len() {
                let mut plus: [Matrix; 4] = [f.clone(), g.clone(), h.clone(), j.clone()];
                let mut minus = plus.clone();
                plus[which][idx] += eps;
                minus[which][idx] -= eps;
                let lp = LinearPredictor::new(&plus[0], &plus[1], &plus[2], &plus[3]).unwrap().mse(&u, &target, 0).unwrap();
                let lm = LinearPredictor::new(&minus[0], &minus[1], &minus[2], &minus[3]).unwrap().mse(&u, &target, 0).unwrap();
                let fd = (lp - lm) / (2.0 * eps);
                assert!((fd - grads[which][idx]).abs() < 1e-6 * (1.0 + fd.abs()), "matrix {which} entry {idx}: {fd} vs {}", grads[which][idx]);
            }
        }
    }

    #[test]
    fn burn_in_and_shape_errors() {
        let pred = LinearPredictor::new(&Matrix::zeros(1, 1), &Matrix::zeros(1, 1), &Matrix::zeros(1, 1), &Matrix::identity(1, 1)).unwrap();
        let u = Series::from_rows(1, &[[1.0], [2.0]]).unwrap();
        let y = Series::from_rows(1, &[[1.0], [0.0]]).unwrap();
        assert_eq!(pred.mse(&u, &y, 0).unwrap(), 2.0);
        assert_eq!(pred.mse(&u, &y, 1).unwrap(), 4.0);
        assert!(pred.mse(&u, &y, 2).is_err());
        assert!(pred.run(&Series::zeros(2, 3), None).is_err());
        assert!(LinearPredictor::new(&Matrix::zeros(2, 2), &Matrix::zeros(1, 1), &Matrix::zeros(1, 2), &Matrix::zeros(1, 1)).is_err());
    }
}
