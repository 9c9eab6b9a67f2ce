use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{Error, Result};

const JITTER_START: f64 = 1e-10;
const JITTER_MAX: f64 = 1e-6;
const SYMMETRY_TOL: f64 = 1e-12;

/// Lower Cholesky factor of `A + jitter·I`.
#[derive(Debug, Clone)]
pub struct CholeskyFactor {
    inner: Cholesky<f64, Dyn>,
    jitter: f64,
}

impl CholeskyFactor {
    pub fn l(&self) -> DMatrix<f64> {
        self.inner.l()
    }

    /// Diagonal shift that was needed for the factorization to succeed (0 if none).
    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    pub fn dim(&self) -> usize {
        self.inner.l_dirty().nrows()
    }

    /// Solves `(L Lᵀ) X = B`.
    pub fn solve(&self, b: &DMatrix<f64>) -> DMatrix<f64> {
        self.inner.solve(b)
    }

    pub fn solve_vec(&self, b: &DVector<f64>) -> DVector<f64> {
        self.inner.solve(b)
    }

    /// Solves `Lᵀ X = Z` in place. Columns of standard normal `Z` become
    /// draws with covariance `(L Lᵀ)⁻¹`.
    pub fn solve_lt_mut(&self, z: &mut DMatrix<f64>) {
        let ok = self.inner.l_dirty().tr_solve_lower_triangular_mut(z);
        debug_assert!(ok);
    }

    pub fn inverse(&self) -> DMatrix<f64> {
        let mut inv = self.inner.inverse();
        super::symmetrize(&mut inv);
        inv
    }
}

/// Factors a symmetric positive (semi)definite matrix, adding diagonal jitter
/// when the plain factorization fails.
///
/// The jitter starts at `1e-10·trace(A)/n` and grows by 10× up to
/// `1e-6·trace(A)/n`. When the trace is zero the scale falls back to 1. A
/// zero diagonal entry in a matrix with positive trace means a whole zero
/// row and column; that is a structural rank deficiency and is rejected
/// instead of being jittered away.
pub fn cholesky_psd(a: &DMatrix<f64>) -> Result<CholeskyFactor> {
    let n = a.nrows();
    if n == 0 || a.ncols() != n {
        return Err(Error::Dimension(format!(
            "expected a non-empty square matrix, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    let max_abs = a.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut asym = 0.0f64;
    for i in 0..n {
        for j in (i + 1)..n {
            asym = asym.max((a[(i, j)] - a[(j, i)]).abs());
        }
    }
    if max_abs > 0.0 && asym > SYMMETRY_TOL * max_abs {
        return Err(Error::NotSymmetric(asym / max_abs));
    }
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::NotPositiveDefinite {
            dim: n,
            max_jitter: 0.0,
        });
    }

    if let Some(inner) = Cholesky::new(a.clone()) {
        return Ok(CholeskyFactor { inner, jitter: 0.0 });
    }

    let trace = a.trace();
    let scale = if trace > 0.0 { trace / n as f64 } else { 1.0 };
    let max_jitter = JITTER_MAX * scale;
    if trace > 0.0 && (0..n).any(|i| a[(i, i)] == 0.0) {
        return Err(Error::NotPositiveDefinite {
            dim: n,
            max_jitter: 0.0,
        });
    }
    let mut jitter = JITTER_START * scale;
    while jitter <= max_jitter * (1.0 + 1e-9) {
        let mut shifted = a.clone();
        for i in 0..n {
            shifted[(i, i)] += jitter;
        }
        if let Some(inner) = Cholesky::new(shifted) {
            log::debug!("cholesky needed jitter {jitter:e} (dim {n})");
            return Ok(CholeskyFactor { inner, jitter });
        }
        jitter *= 10.0;
    }
    Err(Error::NotPositiveDefinite { dim: n, max_jitter })
}

/// Solves `A X = B` for symmetric positive definite `A` with one factorization
/// shared by all right-hand sides.
pub fn solve_direct(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if b.nrows() != a.nrows() {
        return Err(Error::Dimension(format!(
            "system is {}x{} but right-hand side has {} rows",
            a.nrows(),
            a.ncols(),
            b.nrows()
        )));
    }
    Ok(cholesky_psd(a)?.solve(b))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reconstruct(f: &CholeskyFactor) -> DMatrix<f64> {
        let l = f.l();
        &l * l.transpose()
    }

    #[test]
    fn identity_factor() {
        let f = cholesky_psd(&DMatrix::identity(3, 3)).unwrap();
        assert_eq!(f.l(), DMatrix::identity(3, 3));
        assert_eq!(f.jitter(), 0.0);
    }

    #[test]
    fn two_by_two_factor() {
        let a = DMatrix::from_row_slice(2, 2, &[4.0, 2.0, 2.0, 3.0]);
        let f = cholesky_psd(&a).unwrap();
        let expected = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 1.0, 2f64.sqrt()]);
        assert!((f.l() - expected).norm() < 1e-14);
        assert!((reconstruct(&f) - &a).norm() <= 1e-12 * a.norm());
    }

    #[test]
    fn zero_matrix_is_jittered() {
        let f = cholesky_psd(&DMatrix::zeros(2, 2)).unwrap();
        assert!(f.jitter() > 0.0);
        let l = f.l();
        for i in 0..2 {
            assert!((l[(i, i)] - f.jitter().sqrt()).abs() < 1e-20);
        }
    }

    #[test]
    fn zero_row_is_rejected() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]);
        assert!(matches!(
            cholesky_psd(&a),
            Err(Error::NotPositiveDefinite { .. })
        ));
    }

    #[test]
    fn indefinite_is_rejected() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(cholesky_psd(&a).is_err());
    }

    #[test]
    fn asymmetric_is_rejected() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0]);
        assert!(matches!(cholesky_psd(&a), Err(Error::NotSymmetric(_))));
    }

    #[test]
    fn slightly_indefinite_gets_jitter() {
        // rank one matrix, smallest eigenvalue is zero up to rounding
        let v = DMatrix::from_column_slice(3, 1, &[1.0, 2.0, 3.0]);
        let a = &v * v.transpose();
        let f = cholesky_psd(&a).unwrap();
        let shifted = &a + DMatrix::identity(3, 3) * f.jitter();
        assert!((reconstruct(&f) - shifted).norm() <= 1e-10 * a.norm());
    }

    #[test]
    fn direct_identity_and_diagonal() {
        let b = DMatrix::from_row_slice(3, 2, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let x = solve_direct(&DMatrix::identity(3, 3), &b).unwrap();
        assert!((x - &b).norm() < 1e-15);

        let a = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 4.0]);
        let b = DMatrix::from_column_slice(2, 1, &[2.0, 8.0]);
        let x = solve_direct(&a, &b).unwrap();
        assert!((x - DMatrix::from_column_slice(2, 1, &[1.0, 2.0])).norm() < 1e-15);
    }

    #[test]
    fn direct_random_residual() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let m = DMatrix::from_fn(50, 50, |_, _| rng.random::<f64>() - 0.5);
        let a = &m * m.transpose() + DMatrix::identity(50, 50);
        let b = DMatrix::from_fn(50, 5, |_, _| rng.random::<f64>());
        let x = solve_direct(&a, &b).unwrap();
        for c in 0..5 {
            let r = (&a * x.column(c) - b.column(c)).norm();
            assert!(r <= 1e-10 * b.column(c).norm(), "column {c}: {r}");
        }
    }
}
