//! BFGS with a backtracking Armijo line search. The objective may reject a
//! point (returns `None`), which the line search treats as a failed trial.

use alloc::vec::Vec;

use nalgebra::DVector;

use crate::linalg::Matrix;

#[derive(Debug, Clone, PartialEq)]
pub struct BfgsConfig {
    pub max_iter: usize,
    /// Stop when `‖∇f‖₂` falls below this.
    pub grad_tol: f64,
    /// Stop when `‖Δθ‖₂ ≤ step_tol · (1 + ‖θ‖₂)`.
    pub step_tol: f64,
}

impl Default for BfgsConfig {
    fn default() -> Self {
        Self { max_iter: 2000, grad_tol: 1e-6, step_tol: 1e-10 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    Gradient,
    Step,
    MaxIterations,
    LineSearch,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub f: f64,
    pub grad_norm: f64,
    pub iterations: usize,
    pub reason: StopReason,
}

impl Minimum {
    pub fn converged(&self) -> bool {
        matches!(self.reason, StopReason::Gradient | StopReason::Step)
    }
}

const ARMIJO: f64 = 1e-4;
const MAX_HALVINGS: usize = 60;

/// Minimizes from `x0`. Returns `None` when `x0` itself is rejected.
pub fn minimize<F>(mut f: F, x0: &[f64], cfg: &BfgsConfig) -> Option<Minimum>
where
    F: FnMut(&[f64]) -> Option<(f64, Vec<f64>)>,
{
    let dim = x0.len();
    let mut x = DVector::from_column_slice(x0);
    let (mut fx, g0) = f(x.as_slice())?;
    if !fx.is_finite() {
        return None;
    }
    let mut g = DVector::from_vec(g0);
    let mut h = Matrix::identity(dim, dim);
    let mut fresh = true;
    let mut iterations = 0;
    let reason = loop {
        if g.norm() <= cfg.grad_tol {
            break StopReason::Gradient;
        }
        if iterations >= cfg.max_iter {
            break StopReason::MaxIterations;
        }
        iterations += 1;
        let mut d = -(&h * &g);
        if d.dot(&g) >= 0.0 {
            h = Matrix::identity(dim, dim);
            fresh = true;
            d = -g.clone();
        }
        let slope = d.dot(&g);
        let mut alpha = if fresh { (1.0 / g.norm()).min(1.0) } else { 1.0 };
        let mut accepted = None;
        for _ in 0..MAX_HALVINGS {
            let trial = &x + &d * alpha;
            if let Some((ft, gt)) = f(trial.as_slice()) {
                if ft.is_finite() && ft <= fx + ARMIJO * alpha * slope {
                    accepted = Some((trial, ft, DVector::from_vec(gt)));
                    break;
                }
            }
            alpha *= 0.5;
        }
        let Some((x_new, f_new, g_new)) = accepted else {
            if fresh {
                break StopReason::LineSearch;
            }
            h = Matrix::identity(dim, dim);
            fresh = true;
            continue;
        };
        let s = &x_new - &x;
        let y = &g_new - &g;
        let step_small = s.norm() <= cfg.step_tol * (1.0 + x.norm());
        x = x_new;
        fx = f_new;
        g = g_new;
        if step_small {
            if fresh {
                break StopReason::Step;
            }
            // A tiny step from a stale curvature model: retry along the gradient.
            h = Matrix::identity(dim, dim);
            fresh = true;
            continue;
        }
        let sy = s.dot(&y);
        if sy > 1e-12 * s.norm() * y.norm() {
            if fresh {
                h = Matrix::identity(dim, dim) * (sy / y.dot(&y));
            }
            let rho = 1.0 / sy;
            let hy = &h * &y;
            let yhy = y.dot(&hy);
            // H ← (I − ρ s yᵀ) H (I − ρ y sᵀ) + ρ s sᵀ
            h += (&s * s.transpose()) * (rho * rho * yhy + rho) - (&hy * s.transpose() + &s * hy.transpose()) * rho;
            fresh = false;
        }
    };
    Some(Minimum { x: x.as_slice().to_vec(), f: fx, grad_norm: g.norm(), iterations, reason })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn rosenbrock(x: &[f64]) -> Option<(f64, Vec<f64>)> {
        let (a, b) = (x[0], x[1]);
        let f = (1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2);
        let g = vec![-2.0 * (1.0 - a) - 400.0 * a * (b - a * a), 200.0 * (b - a * a)];
        Some((f, g))
    }

    #[test]
    fn quadratic_converges_quickly() {
        let f = |x: &[f64]| {
            let v = 3.0 * x[0] * x[0] + x[1] * x[1] + x[0] * x[1] - x[0];
            Some((v, vec![6.0 * x[0] + x[1] - 1.0, 2.0 * x[1] + x[0]]))
        };
        let m = minimize(f, &[1.0, 1.0], &BfgsConfig::default()).unwrap();
        assert!(m.converged());
        assert!(m.iterations < 20);
        // Minimizer solves [6 1; 1 2] x = [1; 0].
        assert!((m.x[0] - 2.0 / 11.0).abs() < 1e-7);
        assert!((m.x[1] + 1.0 / 11.0).abs() < 1e-7);
    }

    #[test]
    fn rosenbrock_valley() {
        let m = minimize(rosenbrock, &[-1.2, 1.0], &BfgsConfig::default()).unwrap();
        assert!(m.converged(), "{m:?}");
        assert!((m.x[0] - 1.0).abs() < 1e-5 && (m.x[1] - 1.0).abs() < 1e-5);
    }

    #[test]
    fn stationary_start_stops_immediately() {
        let m = minimize(rosenbrock, &[1.0, 1.0], &BfgsConfig::default()).unwrap();
        assert_eq!(m.iterations, 0);
        assert_eq!(m.reason, StopReason::Gradient);
        assert_eq!(m.x, vec![1.0, 1.0]);
    }

    #[test]
    fn rejected_region_is_avoided() {
        // Minimum of (x − 2)² restricted to x < 1.
        let f = |x: &[f64]| (x[0] < 1.0).then(|| ((x[0] - 2.0).powi(2), vec![2.0 * (x[0] - 2.0)]));
        let m = minimize(f, &[0.0], &BfgsConfig::default()).unwrap();
        assert!(m.x[0] < 1.0 && m.x[0] > 0.99);
        assert!(minimize(f, &[1.5], &BfgsConfig::default()).is_none());
    }

    #[test]
    fn iteration_cap() {
        let cfg = BfgsConfig { max_iter: 3, ..BfgsConfig::default() };
        let m = minimize(rosenbrock, &[-1.2, 1.0], &cfg).unwrap();
        assert_eq!(m.reason, StopReason::MaxIterations);
        assert_eq!(m.iterations, 3);
    }
}
