use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{ChiSquared, Distribution, Gamma, StandardNormal};

use super::cholesky::{cholesky_psd, CholeskyFactor};
use crate::error::{Error, Result};

pub fn standard_normal_matrix<R: Rng + ?Sized>(
    rows: usize,
    cols: usize,
    rng: &mut R,
) -> DMatrix<f64> {
    // column-major fill order, fixed so draws are reproducible
    DMatrix::from_fn(rows, cols, |_, _| StandardNormal.sample(rng))
}

/// Draw from `N(mean, precision⁻¹)`.
pub fn sample_mvnormal<R: Rng + ?Sized>(
    mean: &DVector<f64>,
    precision: &DMatrix<f64>,
    rng: &mut R,
) -> Result<DVector<f64>> {
    if precision.nrows() != mean.len() {
        return Err(Error::Dimension(format!(
            "mean has length {} but precision is {}x{}",
            mean.len(),
            precision.nrows(),
            precision.ncols()
        )));
    }
    let factor = cholesky_psd(precision)?;
    Ok(sample_mvnormal_factored(mean, &factor, rng))
}

/// Draw from `N(mean, (L Lᵀ)⁻¹)` given the factor of the precision.
pub fn sample_mvnormal_factored<R: Rng + ?Sized>(
    mean: &DVector<f64>,
    precision_factor: &CholeskyFactor,
    rng: &mut R,
) -> DVector<f64> {
    let mut z = standard_normal_matrix(mean.len(), 1, rng);
    precision_factor.solve_lt_mut(&mut z);
    mean + z.column(0)
}

/// `n × D` matrix whose rows are i.i.d. `N(0, (L Lᵀ)⁻¹)`.
pub fn sample_normal_rows<R: Rng + ?Sized>(
    n: usize,
    precision_factor: &CholeskyFactor,
    rng: &mut R,
) -> DMatrix<f64> {
    let mut z = standard_normal_matrix(precision_factor.dim(), n, rng);
    precision_factor.solve_lt_mut(&mut z);
    z.transpose()
}

/// Wishart draw with scale `W` and `nu` degrees of freedom (Bartlett
/// decomposition). The mean is `nu·W`.
pub fn sample_wishart<R: Rng + ?Sized>(
    scale: &DMatrix<f64>,
    nu: f64,
    rng: &mut R,
) -> Result<DMatrix<f64>> {
    let d = scale.nrows();
    if !(nu >= d as f64) || !nu.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "wishart degrees of freedom {nu} must be at least the dimension {d}"
        )));
    }
    let l = cholesky_psd(scale)?.l();
    let mut a = DMatrix::zeros(d, d);
    for i in 0..d {
        let chi =
            ChiSquared::new(nu - i as f64).map_err(|e| Error::InvalidParameter(e.to_string()))?;
        a[(i, i)] = chi.sample(rng).sqrt();
        for j in 0..i {
            a[(i, j)] = StandardNormal.sample(rng);
        }
    }
    let la = l * a;
    let mut out = &la * la.transpose();
    super::symmetrize(&mut out);
    Ok(out)
}

/// Joint draw `Λ ~ W(scale, nu)`, then `μ ~ N(mu0, (beta0·Λ)⁻¹)`.
pub fn sample_normal_wishart<R: Rng + ?Sized>(
    mu0: &DVector<f64>,
    beta0: f64,
    scale: &DMatrix<f64>,
    nu: f64,
    rng: &mut R,
) -> Result<(DVector<f64>, DMatrix<f64>)> {
    if !(beta0 > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "normal-wishart beta must be positive, got {beta0}"
        )));
    }
    if mu0.len() != scale.nrows() {
        return Err(Error::Dimension(format!(
            "mean has length {} but scale is {}x{}",
            mu0.len(),
            scale.nrows(),
            scale.ncols()
        )));
    }
    let lambda = sample_wishart(scale, nu, rng)?;
    let mu = sample_mvnormal(mu0, &(&lambda * beta0), rng)?;
    Ok((mu, lambda))
}

/// Gamma draw in the mean/degrees-of-freedom parameterization with density
/// `∝ x^{ν/2−1} exp(−ν x / (2μ))`, i.e. shape `ν/2` and rate `ν/(2μ)`.
/// The mean is exactly `μ`.
pub fn sample_gamma_mu_nu<R: Rng + ?Sized>(mu: f64, nu: f64, rng: &mut R) -> Result<f64> {
    if !(mu > 0.0 && nu > 0.0) || !mu.is_finite() || !nu.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "gamma parameters must be positive, got mu={mu}, nu={nu}"
        )));
    }
    let shape = nu / 2.0;
    let scale = 2.0 * mu / nu;
    let g = Gamma::new(shape, scale).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    Ok(g.sample(rng))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;

    fn within(actual: f64, expected: f64, rel: f64) -> bool {
        (actual - expected).abs() <= rel * expected.abs()
    }

    #[test]
    fn standard_normal_mean() {
        let mut rng = RngStream::new(1, 0).rng();
        let n = 100_000;
        let mean = DVector::zeros(3);
        let prec = DMatrix::identity(3, 3);
        let mut sum = DVector::zeros(3);
        for _ in 0..n {
            sum += sample_mvnormal(&mean, &prec, &mut rng).unwrap();
        }
        let se = 1.0 / (n as f64).sqrt();
        for v in (sum / n as f64).iter() {
            assert!(v.abs() < 4.0 * se, "{v}");
        }
    }

    #[test]
    fn mvnormal_variances() {
        let mut rng = RngStream::new(2, 0).rng();
        let n = 100_000;
        let mean = DVector::from_vec(vec![1.0, 2.0]);
        let prec = DMatrix::from_diagonal(&DVector::from_vec(vec![4.0, 1.0]));
        let draws: Vec<_> = (0..n)
            .map(|_| sample_mvnormal(&mean, &prec, &mut rng).unwrap())
            .collect();
        let m: DVector<f64> = draws.iter().sum::<DVector<f64>>() / n as f64;
        let mut var = DVector::zeros(2);
        for x in &draws {
            var += (x - &m).map(|v| v * v);
        }
        var /= (n - 1) as f64;
        assert!(within(var[0], 0.25, 0.05), "{}", var[0]);
        assert!(within(var[1], 1.0, 0.05), "{}", var[1]);
    }

    #[test]
    fn mvnormal_zero_row_precision_fails() {
        let mut rng = RngStream::new(3, 0).rng();
        let prec = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]);
        assert!(sample_mvnormal(&DVector::zeros(2), &prec, &mut rng).is_err());
    }

    fn wishart_mean(scale: &DMatrix<f64>, nu: f64, n: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = RngStream::new(seed, 0).rng();
        let d = scale.nrows();
        let mut acc = DMatrix::zeros(d, d);
        for _ in 0..n {
            acc += sample_wishart(scale, nu, &mut rng).unwrap();
        }
        acc / n as f64
    }

    #[test]
    fn wishart_identity_mean() {
        let m = wishart_mean(&DMatrix::identity(2, 2), 2.0, 100_000, 4);
        assert!(within(m[(0, 0)], 2.0, 0.05));
        assert!(within(m[(1, 1)], 2.0, 0.05));
        // off-diagonal expectation is 0; per-draw sd is sqrt(nu) ≈ 1.41
        assert!(m[(0, 1)].abs() < 0.05 * 2.0);
    }

    #[test]
    fn wishart_diagonal_mean() {
        let w = DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 1.0]));
        let m = wishart_mean(&w, 10.0, 100_000, 5);
        assert!(within(m[(0, 0)], 20.0, 0.05));
        assert!(within(m[(1, 1)], 10.0, 0.05));
    }

    #[test]
    fn wishart_reproducible() {
        let a = sample_wishart(
            &DMatrix::identity(3, 3),
            3.0,
            &mut RngStream::new(9, 1).rng(),
        )
        .unwrap();
        let b = sample_wishart(
            &DMatrix::identity(3, 3),
            3.0,
            &mut RngStream::new(9, 1).rng(),
        )
        .unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn wishart_rejects_small_nu() {
        let mut rng = RngStream::new(0, 0).rng();
        assert!(sample_wishart(&DMatrix::identity(3, 3), 2.5, &mut rng).is_err());
    }

    #[test]
    fn normal_wishart_concentrates_for_large_beta() {
        // With nu = D = 2 the Wishart draw is often near-singular, so a hard
        // bound on the worst of 1000 mean draws does not hold; check the bulk
        // and the whitened deviation instead.
        let mut rng = RngStream::new(6, 0).rng();
        let mu0 = DVector::from_vec(vec![0.5, -1.0]);
        let w = DMatrix::identity(2, 2);
        let beta = 1e6;
        let mut devs = Vec::new();
        let mut z2 = 0.0;
        for _ in 0..1000 {
            let (mu, lam) = sample_normal_wishart(&mu0, beta, &w, 2.0, &mut rng).unwrap();
            devs.push((&mu - &mu0).amax());
            let l = cholesky_psd(&lam).unwrap().l();
            z2 += (l.transpose() * (&mu - &mu0) * beta.sqrt()).norm_squared();
        }
        devs.sort_by(f64::total_cmp);
        assert!(devs[500] < 0.01, "median deviation {}", devs[500]);
        // E‖z‖² = D
        assert!((z2 / 1000.0 - 2.0).abs() < 0.3, "{}", z2 / 1000.0);
    }

    #[test]
    fn normal_wishart_precision_mean() {
        let mut rng = RngStream::new(7, 0).rng();
        let w = DMatrix::from_row_slice(2, 2, &[1.0, 0.3, 0.3, 0.5]);
        let n = 100_000;
        let mut lam_sum = DMatrix::zeros(2, 2);
        for _ in 0..n {
            let (_, lam) =
                sample_normal_wishart(&DVector::zeros(2), 2.0, &w, 4.0, &mut rng).unwrap();
            lam_sum += lam;
        }
        let m = lam_sum / n as f64;
        let expected = &w * 4.0;
        for i in 0..2 {
            for j in 0..2 {
                assert!(
                    within(m[(i, j)], expected[(i, j)], 0.05),
                    "{i}{j}: {}",
                    m[(i, j)]
                );
            }
        }
    }

    #[test]
    fn normal_wishart_reproducible() {
        let w = DMatrix::identity(2, 2);
        let a = sample_normal_wishart(
            &DVector::zeros(2),
            2.0,
            &w,
            2.0,
            &mut RngStream::new(3, 3).rng(),
        )
        .unwrap();
        let b = sample_normal_wishart(
            &DVector::zeros(2),
            2.0,
            &w,
            2.0,
            &mut RngStream::new(3, 3).rng(),
        )
        .unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn gamma_mean_is_mu() {
        for (mu, nu, seed) in [(1.0, 1.0, 10u64), (7.0, 7.0, 11)] {
            let mut rng = RngStream::new(seed, 0).rng();
            let n = 1_000_000;
            let s: f64 = (0..n)
                .map(|_| sample_gamma_mu_nu(mu, nu, &mut rng).unwrap())
                .sum();
            assert!(within(s / n as f64, mu, 0.01), "mu={mu}: {}", s / n as f64);
        }
    }

    #[test]
    fn gamma_rejects_zero_nu() {
        let mut rng = RngStream::new(0, 0).rng();
        assert!(sample_gamma_mu_nu(1.0, 0.0, &mut rng).is_err());
    }
}
