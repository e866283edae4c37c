//! Dense matrix kernel: SVD with a fixed ordering and sign convention,
//! spectral radius, the discrete Lyapunov solver and the innovation-form
//! Riccati solver.
//!
//! Everything here is a pure function of its inputs.

use alloc::format;
use alloc::vec::Vec;

use nalgebra::{Complex, DMatrix, Schur, SymmetricEigen, SVD};
// Float math for no_std builds; std's inherent methods shadow it in tests.
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};

/// Dense, heap-allocated real matrix.
pub type Matrix = DMatrix<f64>;

/// Largest state dimension solved through the Kronecker linearization;
/// larger systems use squaring iteration.
pub const KRONECKER_MAX_ORDER: usize = 30;
/// Fixed-point iteration cap for [`solve_innovation_riccati`].
pub const RICCATI_MAX_ITER: usize = 100_000;
const RICCATI_STEP_TOL: f64 = 1e-10;
const RICCATI_RESIDUAL_TOL: f64 = 1e-8;
const ITERATIVE_EPS: f64 = f64::EPSILON;

/// Singular value decomposition `M = U diag(S) Vᵀ` with singular values in
/// ascending order.
///
/// Thin form: for an `m × n` input, `U` is `m × k`, `V` is `n × k` with
/// `k = min(m, n)`. In every column of `V` the entry of largest magnitude is
/// positive (the matching column of `U` is flipped along with it).
#[derive(Debug, Clone, PartialEq)]
pub struct SvdResult {
    pub u: Matrix,
    pub singular_values: Vec<f64>,
    pub v: Matrix,
}

impl SvdResult {
    pub fn reconstruct(&self) -> Matrix {
        let s = Matrix::from_diagonal(&nalgebra::DVector::from_column_slice(&self.singular_values));
        &self.u * s * self.v.transpose()
    }

    /// Number of singular values above `rel_tol · s_max`.
    pub fn rank(&self, rel_tol: f64) -> usize {
        let s_max = self.singular_values.last().copied().unwrap_or(0.0);
        if s_max <= 0.0 {
            return 0;
        }
        self.singular_values.iter().filter(|&&s| s > rel_tol * s_max).count()
    }
}

pub fn svd(m: &Matrix) -> Result<SvdResult> {
    check_finite(m, "svd input")?;
    let (rows, cols) = m.shape();
    let k = rows.min(cols);
    if k == 0 {
        return Ok(SvdResult {
            u: Matrix::zeros(rows, 0),
            singular_values: Vec::new(),
            v: Matrix::zeros(cols, 0),
        });
    }
    let dec = SVD::try_new(m.clone(), true, true, ITERATIVE_EPS, 1000 * (rows + cols))
        .ok_or(Error::SolverFailure { solver: "svd", rows, cols })?;
    let (Some(u_raw), Some(vt_raw)) = (dec.u, dec.v_t) else {
        return Err(Error::SolverFailure { solver: "svd", rows, cols });
    };

    let mut order: Vec<usize> = (0..k).collect();
    // Stable sort keeps ties in the decomposition's own order.
    order.sort_by(|&a, &b| dec.singular_values[a].total_cmp(&dec.singular_values[b]));

    let mut u = Matrix::zeros(rows, k);
    let mut v = Matrix::zeros(cols, k);
    let mut singular_values = Vec::with_capacity(k);
    for (dst, &src) in order.iter().enumerate() {
        singular_values.push(dec.singular_values[src].max(0.0));
        u.set_column(dst, &u_raw.column(src));
        v.set_column(dst, &vt_raw.row(src).transpose());
    }
    for j in 0..k {
        let mut pivot = 0;
        for i in 1..cols {
            if v[(i, j)].abs() > v[(pivot, j)].abs() {
                pivot = i;
            }
        }
        if v[(pivot, j)] < 0.0 {
            v.column_mut(j).neg_mut();
            u.column_mut(j).neg_mut();
        }
    }
    Ok(SvdResult { u, singular_values, v })
}

/// Eigenvalues of a square matrix via the real Schur form.
pub fn eigenvalues(a: &Matrix) -> Result<Vec<Complex<f64>>> {
    check_square(a, "eigenvalue input")?;
    check_finite(a, "eigenvalue input")?;
    let n = a.nrows();
    if n == 0 {
        return Ok(Vec::new());
    }
    let schur = Schur::try_new(a.clone(), ITERATIVE_EPS, 1000 * n)
        .ok_or(Error::SolverFailure { solver: "schur", rows: n, cols: n })?;
    Ok(schur.complex_eigenvalues().iter().copied().collect())
}

/// `max |λᵢ(A)|`; zero for an empty matrix.
pub fn spectral_radius(a: &Matrix) -> Result<f64> {
    Ok(eigenvalues(a)?.iter().map(|z| z.re.hypot(z.im)).fold(0.0, f64::max))
}

/// Solves `P = A P Aᵀ + W` for stable `A` and symmetric PSD `W`.
pub fn solve_discrete_lyapunov(a: &Matrix, w: &Matrix) -> Result<Matrix> {
    check_square(a, "A")?;
    let n = a.nrows();
    if w.shape() != (n, n) {
        return Err(Error::Dimension(format!(
            "Lyapunov: W is {}x{}, expected {n}x{n}",
            w.nrows(),
            w.ncols()
        )));
    }
    check_finite(w, "W")?;
    let tol = 1e-10 * (1.0 + w.norm());
    if asymmetry(w) > tol {
        return Err(Error::Dimension(format!("Lyapunov: W is not symmetric")));
    }
    if n == 0 {
        return Ok(Matrix::zeros(0, 0));
    }
    let radius = spectral_radius(a)?;
    if radius >= 1.0 {
        return Err(Error::Unstable { what: "Lyapunov A", radius });
    }

    let p = if n <= KRONECKER_MAX_ORDER {
        let lhs = Matrix::identity(n * n, n * n) - a.kronecker(a);
        let rhs = nalgebra::DVector::from_column_slice(w.as_slice());
        let sol = lhs
            .lu()
            .solve(&rhs)
            .ok_or(Error::SolverFailure { solver: "lyapunov", rows: n, cols: n })?;
        Matrix::from_column_slice(n, n, sol.as_slice())
    } else {
        lyapunov_doubling(a, w)?
    };
    Ok(symmetrize(&p))
}

fn lyapunov_doubling(a: &Matrix, w: &Matrix) -> Result<Matrix> {
    let mut p = w.clone();
    let mut ak = a.clone();
    for _ in 0..64 {
        let term = &ak * &p * ak.transpose();
        p += &term;
        if term.norm() <= f64::EPSILON * (1.0 + p.norm()) {
            return Ok(p);
        }
        ak = &ak * &ak;
    }
    Err(Error::NoConvergence { solver: "lyapunov doubling", iterations: 64, residual: f64::NAN })
}

/// Stabilizing solution of the innovation-form Riccati equation.
#[derive(Debug, Clone, PartialEq)]
pub struct RiccatiSolution {
    /// Fixed point `Π`.
    pub pi: Matrix,
    /// Innovation covariance `Δ(Π) = Λ₀ − CΠCᵀ`.
    pub delta: Matrix,
    /// Gain `(C̄ᵀ − AΠCᵀ) Δ⁻¹`.
    pub gain: Matrix,
    pub iterations: usize,
}

/// Fixed-point iteration of
/// `Π = AΠAᵀ + (C̄ᵀ − AΠCᵀ) Δ(Π)⁻¹ (C̄ᵀ − AΠCᵀ)ᵀ`, `Δ(Π) = Λ₀ − CΠCᵀ`,
/// started from `Π₀ = 0`.
///
/// `cbar` is the `r × n` cross-covariance `E[y(t+1) xᵀ(t)]`-style matrix
/// (so `C̄ᵀ` is `n × r`).
pub fn solve_innovation_riccati(
    a: &Matrix,
    c: &Matrix,
    cbar: &Matrix,
    lambda0: &Matrix,
) -> Result<RiccatiSolution> {
    check_square(a, "A")?;
    let n = a.nrows();
    let r = c.nrows();
    if c.ncols() != n || cbar.shape() != (r, n) || lambda0.shape() != (r, r) {
        return Err(Error::Dimension(format!(
            "Riccati: A {n}x{n}, C {}x{}, C̄ {}x{}, Λ₀ {}x{}",
            c.nrows(),
            c.ncols(),
            cbar.nrows(),
            cbar.ncols(),
            lambda0.nrows(),
            lambda0.ncols()
        )));
    }
    for (m, what) in [(a, "A"), (c, "C"), (cbar, "C̄"), (lambda0, "Λ₀")] {
        check_finite(m, what)?;
    }
    if asymmetry(lambda0) > 1e-10 * (1.0 + lambda0.norm()) {
        return Err(Error::Dimension(format!("Riccati: Λ₀ is not symmetric")));
    }
    let radius = spectral_radius(a)?;
    if radius >= 1.0 {
        return Err(Error::Unstable { what: "Riccati A", radius });
    }

    let mut pi = Matrix::zeros(n, n);
    let mut iterations = 0;
    let mut last_step = f64::INFINITY;
    loop {
        if iterations >= RICCATI_MAX_ITER {
            return Err(Error::NoConvergence {
                solver: "riccati",
                iterations,
                residual: last_step,
            });
        }
        let next = riccati_map(a, c, cbar, lambda0, &pi)
            .ok_or(Error::IndefiniteInnovation { iteration: iterations })?;
        iterations += 1;
        last_step = (&next - &pi).norm();
        let converged = last_step <= RICCATI_STEP_TOL * (1.0 + pi.norm());
        pi = next;
        if converged {
            break;
        }
    }

    let delta = symmetrize(&(lambda0 - c * &pi * c.transpose()));
    let chol = delta
        .clone()
        .cholesky()
        .ok_or(Error::IndefiniteInnovation { iteration: iterations })?;
    let g = cbar.transpose() - a * &pi * c.transpose();
    let gain = chol.solve(&g.transpose()).transpose();

    let residual = match riccati_map(a, c, cbar, lambda0, &pi) {
        Some(image) => (&image - &pi).norm(),
        None => f64::INFINITY,
    };
    if residual > RICCATI_RESIDUAL_TOL * (1.0 + pi.norm()) {
        return Err(Error::NoConvergence { solver: "riccati", iterations, residual });
    }
    Ok(RiccatiSolution { pi, delta, gain, iterations })
}

/// One application of the Riccati map; `None` when `Δ(Π)` is not PD.
pub(crate) fn riccati_map(
    a: &Matrix,
    c: &Matrix,
    cbar: &Matrix,
    lambda0: &Matrix,
    pi: &Matrix,
) -> Option<Matrix> {
    let delta = symmetrize(&(lambda0 - c * pi * c.transpose()));
    let chol = delta.cholesky()?;
    let g = cbar.transpose() - a * pi * c.transpose();
    let next = a * pi * a.transpose() + &g * chol.solve(&g.transpose());
    Some(symmetrize(&next))
}

/// Markov parameters `C Aᵏ B` for `k = 0..count`.
pub fn markov_parameters(a: &Matrix, b: &Matrix, c: &Matrix, count: usize) -> Vec<Matrix> {
    let mut out = Vec::with_capacity(count);
    let mut akb = b.clone();
    for _ in 0..count {
        out.push(c * &akb);
        akb = a * akb;
    }
    out
}

/// Smallest eigenvalue of the symmetric part of `m`.
pub fn min_symmetric_eigenvalue(m: &Matrix) -> Result<f64> {
    check_square(m, "symmetric eigen input")?;
    let n = m.nrows();
    if n == 0 {
        return Ok(f64::INFINITY);
    }
    let eig = SymmetricEigen::try_new(symmetrize(m), ITERATIVE_EPS, 1000 * n)
        .ok_or(Error::SolverFailure { solver: "symmetric eigen", rows: n, cols: n })?;
    Ok(eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min))
}

/// A factor `L` with `L Lᵀ = M` for symmetric PSD `M`: Cholesky when it
/// succeeds, otherwise `V diag(√max(λ, 0))` from the eigendecomposition.
pub fn psd_factor(m: &Matrix) -> Option<Matrix> {
    let n = m.nrows();
    if m.ncols() != n {
        return None;
    }
    let sym = symmetrize(m);
    if let Some(chol) = sym.clone().cholesky() {
        return Some(chol.l());
    }
    let eig = SymmetricEigen::try_new(sym, ITERATIVE_EPS, 1000 * n.max(1))?;
    let scale = eig.eigenvalues.amax().max(1.0);
    if eig.eigenvalues.iter().any(|&l| l < -1e-9 * scale) {
        return None;
    }
    let mut l = eig.eigenvectors;
    for (j, &lambda) in eig.eigenvalues.iter().enumerate() {
        let s = lambda.max(0.0).sqrt();
        l.column_mut(j).scale_mut(s);
    }
    Some(l)
}

pub fn symmetrize(m: &Matrix) -> Matrix {
    (m + m.transpose()) * 0.5
}

/// `‖M − Mᵀ‖_F`.
pub fn asymmetry(m: &Matrix) -> f64 {
    if m.nrows() != m.ncols() {
        return f64::INFINITY;
    }
    (m - m.transpose()).norm()
}

pub fn is_finite(m: &Matrix) -> bool {
    m.iter().all(|x| x.is_finite())
}

pub(crate) fn check_finite(m: &Matrix, what: &'static str) -> Result<()> {
    if is_finite(m) {
        Ok(())
    } else {
        Err(Error::NonFinite { what })
    }
}

pub(crate) fn check_square(m: &Matrix, what: &str) -> Result<()> {
    if m.nrows() == m.ncols() {
        Ok(())
    } else {
        Err(Error::Dimension(format!("{what} must be square, got {}x{}", m.nrows(), m.ncols())))
    }
}

/// Copy of the `(rows × cols)` block at `(r0, c0)`.
pub(crate) fn block(m: &Matrix, r0: usize, c0: usize, rows: usize, cols: usize) -> Matrix {
    m.view((r0, c0), (rows, cols)).into_owned()
}

/// Assembles `[[a, b], [c, d]]`.
pub(crate) fn block2x2(a: &Matrix, b: &Matrix, c: &Matrix, d: &Matrix) -> Matrix {
    let rows = a.nrows() + c.nrows();
    let cols = a.ncols() + b.ncols();
    let mut out = Matrix::zeros(rows, cols);
    out.view_mut((0, 0), a.shape()).copy_from(a);
    out.view_mut((0, a.ncols()), b.shape()).copy_from(b);
    out.view_mut((a.nrows(), 0), c.shape()).copy_from(c);
    out.view_mut((a.nrows(), a.ncols()), d.shape()).copy_from(d);
    out
}

/// Stacks `top` above `bottom`.
pub(crate) fn vstack(top: &Matrix, bottom: &Matrix) -> Matrix {
    let mut out = Matrix::zeros(top.nrows() + bottom.nrows(), top.ncols());
    out.view_mut((0, 0), top.shape()).copy_from(top);
    out.view_mut((top.nrows(), 0), bottom.shape()).copy_from(bottom);
    out
}

/// Places blocks side by side.
pub(crate) fn hstack(left: &Matrix, right: &Matrix) -> Matrix {
    let mut out = Matrix::zeros(left.nrows(), left.ncols() + right.ncols());
    out.view_mut((0, 0), left.shape()).copy_from(left);
    out.view_mut((0, left.ncols()), right.shape()).copy_from(right);
    out
}

/// Builds a matrix from row slices. Panics on ragged input; meant for
/// literals.
pub fn from_rows(rows: &[&[f64]]) -> Matrix {
    let r = rows.len();
    let c = rows.first().map_or(0, |row| row.len());
    Matrix::from_fn(r, c, |i, j| {
        assert_eq!(rows[i].len(), c, "ragged matrix literal");
        rows[i][j]
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn random_matrix(rng: &mut ChaCha8Rng, r: usize, c: usize) -> Matrix {
        Matrix::from_fn(r, c, |_, _| rng.sample::<f64, _>(StandardNormal))
    }

    fn random_stable(rng: &mut ChaCha8Rng, n: usize, radius: f64) -> Matrix {
        let a = random_matrix(rng, n, n);
        let rho = spectral_radius(&a).unwrap();
        a * (radius / rho)
    }

    fn sec5_a() -> Matrix {
        from_rows(&[&[1.08, -0.23], &[0.58, 0.27]])
    }

    fn sec5_b() -> Matrix {
        from_rows(&[&[-0.56, -1.4], &[-0.56, -0.6]])
    }

    fn assert_close(m: &Matrix, expected: &[&[f64]], tol: f64) {
        let e = from_rows(expected);
        assert_eq!(m.shape(), e.shape());
        for (x, y) in m.iter().zip(e.iter()) {
            assert!((x - y).abs() <= tol, "{m} vs {e}");
        }
    }

    #[test]
    fn svd_identity_and_diagonal() {
        let id = svd(&Matrix::identity(2, 2)).unwrap();
        assert_eq!(id.singular_values, [1.0, 1.0]);
        let uv = &id.u * id.v.transpose();
        assert!((&uv * uv.transpose() - Matrix::identity(2, 2)).norm() < 1e-12);

        let d = svd(&from_rows(&[&[3.0, 0.0], &[0.0, 1.0]])).unwrap();
        assert!((d.singular_values[0] - 1.0).abs() < 1e-12);
        assert!((d.singular_values[1] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn svd_observability_matrix_of_worked_example_is_numerically_rank_one() {
        // O = [C_w; C_w A] with C_w = [1.24, -1.25]: det = -0.004398 by hand.
        let cw = from_rows(&[&[1.24, -1.25]]);
        let o = vstack(&cw, &(&cw * sec5_a()));
        assert!((o.determinant() + 0.004398).abs() < 1e-9);
        let s = svd(&o).unwrap();
        assert!(s.singular_values[0] <= 1e-2 * s.singular_values[1]);
        assert_eq!(s.rank(1e-2), 1);
        assert_eq!(s.rank(1e-6), 2);
    }

    #[test]
    fn svd_handles_empty_and_wide() {
        let e = svd(&Matrix::zeros(0, 3)).unwrap();
        assert!(e.singular_values.is_empty());
        let w = from_rows(&[&[1.0, 2.0, 3.0]]);
        let s = svd(&w).unwrap();
        assert_eq!(s.v.shape(), (3, 1));
        assert!((s.reconstruct() - &w).norm() < 1e-12);
    }

    #[test]
    fn svd_rejects_non_finite() {
        let m = from_rows(&[&[f64::NAN, 0.0]]);
        assert!(matches!(svd(&m), Err(Error::NonFinite { .. })));
    }

    proptest! {
        #[test]
        fn svd_reconstructs_sorted_and_signed(seed in any::<u64>(), r in 1usize..6, c in 1usize..6) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let m = random_matrix(&mut rng, r, c);
            let s = svd(&m).unwrap();
            prop_assert!((s.reconstruct() - &m).norm() <= 1e-10 * m.norm().max(1e-300));
            prop_assert!(s.singular_values.windows(2).all(|w| w[0] <= w[1]));
            prop_assert!(s.singular_values.iter().all(|&x| x >= 0.0));
            let k = s.singular_values.len();
            prop_assert!((s.v.transpose() * &s.v - Matrix::identity(k, k)).norm() < 1e-10);
            prop_assert!((s.u.transpose() * &s.u - Matrix::identity(k, k)).norm() < 1e-10);
            for j in 0..k {
                let col = s.v.column(j);
                let imax = col.iamax();
                prop_assert!(col[imax] > 0.0);
            }
            prop_assert_eq!(svd(&m).unwrap(), s);
        }
    }

    #[test]
    fn spectral_radius_examples() {
        let d = from_rows(&[&[0.5, 0.0], &[0.0, -0.9]]);
        assert!((spectral_radius(&d).unwrap() - 0.9).abs() < 1e-12);
        assert_eq!(spectral_radius(&Matrix::zeros(3, 3)).unwrap(), 0.0);
        // Characteristic polynomial of the worked example: λ² − 1.35λ + 0.425,
        // roots 0.85 and 0.5.
        let rho = spectral_radius(&sec5_a()).unwrap();
        assert!((rho - 0.85).abs() < 1e-10);
        assert!(rho < 1.0);
    }

    #[test]
    fn spectral_radius_complex_pair() {
        let rot = from_rows(&[&[0.0, -0.8], &[0.8, 0.0]]);
        assert!((spectral_radius(&rot).unwrap() - 0.8).abs() < 1e-12);
    }

    #[test]
    fn lyapunov_worked_example() {
        let b = sec5_b();
        let p = solve_discrete_lyapunov(&sec5_a(), &(&b * b.transpose())).unwrap();
        assert_close(&p, &[&[11.34, 9.22], &[9.22, 7.96]], 0.01);
    }

    #[test]
    fn lyapunov_zero_a_returns_w() {
        let w = from_rows(&[&[2.0, 0.5], &[0.5, 1.0]]);
        let p = solve_discrete_lyapunov(&Matrix::zeros(2, 2), &w).unwrap();
        assert!((p - w).norm() < 1e-14);
    }

    #[test]
    fn lyapunov_rejects_unstable() {
        let a = Matrix::identity(2, 2) * 2.0;
        match solve_discrete_lyapunov(&a, &Matrix::identity(2, 2)) {
            Err(Error::Unstable { radius, .. }) => assert!((radius - 2.0).abs() < 1e-12),
            other => panic!("unexpected {other:?}"),
        }
    }

    fn series_oracle(a: &Matrix, w: &Matrix, terms: usize) -> Matrix {
        let mut sum = Matrix::zeros(a.nrows(), a.nrows());
        let mut ak = Matrix::identity(a.nrows(), a.nrows());
        for _ in 0..=terms {
            sum += &ak * w * ak.transpose();
            ak = &ak * a;
        }
        sum
    }

    #[test]
    fn lyapunov_matches_truncated_series_on_random_systems() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let a = random_stable(&mut rng, 3, 0.9);
            let g = random_matrix(&mut rng, 3, 3);
            let w = &g * g.transpose();
            let p = solve_discrete_lyapunov(&a, &w).unwrap();
            let residual = (&p - &a * &p * a.transpose() - &w).norm();
            assert!(residual <= 1e-9 * (1.0 + p.norm()));
            // 0.9^400 ≈ 5e-19, so 200 terms of the squared decay suffice.
            let oracle = series_oracle(&a, &w, 200);
            assert!((&p - oracle).norm() <= 1e-6 * (1.0 + p.norm()));
        }
    }

    #[test]
    fn lyapunov_doubling_path_matches_kronecker() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let a = random_stable(&mut rng, 6, 0.8);
        let g = random_matrix(&mut rng, 6, 2);
        let w = &g * g.transpose();
        let kron = solve_discrete_lyapunov(&a, &w).unwrap();
        let dbl = lyapunov_doubling(&a, &w).unwrap();
        assert!((kron - dbl).norm() < 1e-9);
        let big = random_stable(&mut rng, 35, 0.9);
        let gw = random_matrix(&mut rng, 35, 35);
        let w = &gw * gw.transpose();
        let p = solve_discrete_lyapunov(&big, &w).unwrap();
        assert!((&p - &big * &p * big.transpose() - &w).norm() <= 1e-9 * (1.0 + p.norm()));
    }

    fn sec5_riccati_inputs() -> (Matrix, Matrix, Matrix, Matrix) {
        let a = sec5_a();
        let b = sec5_b();
        let c = from_rows(&[&[-0.25, 2.25], &[1.24, -1.25]]);
        let d = from_rows(&[&[-0.14, -1.0], &[0.0, -1.0]]);
        let p = solve_discrete_lyapunov(&a, &(&b * b.transpose())).unwrap();
        let cbar = &c * &p * a.transpose() + &d * b.transpose();
        let lambda0 = &c * &p * c.transpose() + &d * d.transpose();
        (a, c, cbar, lambda0)
    }

    #[test]
    fn riccati_worked_example() {
        let (a, c, cbar, lambda0) = sec5_riccati_inputs();
        let sol = solve_innovation_riccati(&a, &c, &cbar, &lambda0).unwrap();
        assert_close(&sol.pi, &[&[11.1, 8.98], &[8.98, 7.71]], 0.02);
        assert_close(&sol.delta, &[&[2.0, 1.0], &[1.0, 1.0]], 0.02);
        assert_close(&sol.gain, &[&[0.5, 0.9], &[0.49, 0.11]], 0.02);
    }

    #[test]
    fn riccati_zero_cross_covariance() {
        let (a, c, _, lambda0) = sec5_riccati_inputs();
        let sol = solve_innovation_riccati(&a, &c, &Matrix::zeros(2, 2), &lambda0).unwrap();
        assert_eq!(sol.pi, Matrix::zeros(2, 2));
        assert!((&sol.delta - &lambda0).norm() < 1e-12);
        assert_eq!(sol.gain, Matrix::zeros(2, 2));
    }

    #[test]
    fn riccati_random_systems_satisfy_fixed_point_and_are_stabilizing() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10 {
            let a = random_stable(&mut rng, 3, 0.9);
            let b = random_matrix(&mut rng, 3, 2);
            let c = random_matrix(&mut rng, 2, 3);
            let d = random_matrix(&mut rng, 2, 2);
            let p = solve_discrete_lyapunov(&a, &(&b * b.transpose())).unwrap();
            let cbar = &c * &p * a.transpose() + &d * b.transpose();
            let lambda0 = symmetrize(&(&c * &p * c.transpose() + &d * d.transpose()));
            let sol = solve_innovation_riccati(&a, &c, &cbar, &lambda0).unwrap();
            // Direct substitution into the fixed-point equation.
            let delta = &lambda0 - &c * &sol.pi * c.transpose();
            let g = cbar.transpose() - &a * &sol.pi * c.transpose();
            let rhs = &a * &sol.pi * a.transpose() + &g * delta.clone().try_inverse().unwrap() * g.transpose();
            assert!((&rhs - &sol.pi).norm() <= 1e-8 * (1.0 + sol.pi.norm()));
            assert!(min_symmetric_eigenvalue(&sol.pi).unwrap() > -1e-9);
            let closed = &a - &sol.gain * &c;
            assert!(spectral_radius(&closed).unwrap() <= 1.0 + 1e-9);
        }
    }

    #[test]
    fn riccati_detects_indefinite_innovation() {
        let a = from_rows(&[&[0.5]]);
        let c = from_rows(&[&[1.0]]);
        let lambda0 = from_rows(&[&[-1.0]]);
        assert!(matches!(
            solve_innovation_riccati(&a, &c, &from_rows(&[&[0.1]]), &lambda0),
            Err(Error::IndefiniteInnovation { iteration: 0 })
        ));
    }

    #[test]
    fn psd_factor_falls_back_to_eigen() {
        let m = from_rows(&[&[1.0, 1.0], &[1.0, 1.0]]);
        let l = psd_factor(&m).unwrap();
        assert!((&l * l.transpose() - m).norm() < 1e-12);
        assert!(psd_factor(&from_rows(&[&[1.0, 0.0], &[0.0, -0.5]])).is_none());
    }

    #[test]
    fn markov_parameters_of_identity() {
        let a = Matrix::identity(2, 2) * 0.5;
        let b = from_rows(&[&[1.0], &[0.0]]);
        let c = from_rows(&[&[1.0, 1.0]]);
        let mp = markov_parameters(&a, &b, &c, 3);
        assert_eq!(mp[2][(0, 0)], 0.25);
    }

    #[test]
    fn random_stable_helper_scales() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = random_stable(&mut rng, 4, 0.9);
        assert!((spectral_radius(&a).unwrap() - 0.9).abs() < 1e-10);
        let _: f64 = rng.random();
    }
}
