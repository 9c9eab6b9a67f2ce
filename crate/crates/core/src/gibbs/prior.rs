use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::error::Result;
use crate::model::HyperParams;
use crate::numerics::{cholesky_psd, sample_normal_wishart, symmetrize};

/// Parameters `(μ0*, β0*, W0*, ν0*)` of a Normal-Wishart conditional. The
/// Wishart scale is kept in inverse form, which is what the update produces.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalWishartParams {
    pub mu: DVector<f64>,
    pub beta: f64,
    pub scale_inv: DMatrix<f64>,
    pub nu: f64,
}

impl NormalWishartParams {
    /// Wishart scale `W0*`.
    pub fn scale(&self) -> Result<DMatrix<f64>> {
        Ok(cholesky_psd(&self.scale_inv)?.inverse())
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<(DVector<f64>, DMatrix<f64>)> {
        sample_normal_wishart(&self.mu, self.beta, &self.scale()?, self.nu, rng)
    }
}

/// Normal-Wishart conditional for an entity prior fitted to the residuals
/// `u_i − βᵀx_i` (columns of `residuals`). With feature weights present, the
/// weight prior's dependence on `Λ` adds `λ_β βᵀβ` to the inverse scale and
/// `F` degrees of freedom.
pub fn normal_wishart_posterior(
    hyper: &HyperParams,
    w0_inv: &DMatrix<f64>,
    residuals: &DMatrix<f64>,
    weights: Option<(&DMatrix<f64>, f64)>,
) -> NormalWishartParams {
    let n = residuals.ncols() as f64;
    let d = residuals.nrows();
    let beta0 = hyper.beta0;
    let mu0 = &hyper.mu0;

    let mut sum = DVector::zeros(d);
    for col in residuals.column_iter() {
        sum += col;
    }
    // N·S̄ (uncentred scatter)
    let scatter = residuals * residuals.transpose();

    let beta_star = beta0 + n;
    let mu_star = (mu0 * beta0 + &sum) / beta_star;
    let mut scale_inv = w0_inv + scatter + mu0 * mu0.transpose() * beta0
        - &mu_star * mu_star.transpose() * beta_star;
    let mut nu_star = hyper.nu0 + n;
    if let Some((beta, lambda_beta)) = weights {
        scale_inv += beta.tr_mul(beta) * lambda_beta;
        nu_star += beta.nrows() as f64;
    }
    symmetrize(&mut scale_inv);
    NormalWishartParams {
        mu: mu_star,
        beta: beta_star,
        scale_inv,
        nu: nu_star,
    }
}
