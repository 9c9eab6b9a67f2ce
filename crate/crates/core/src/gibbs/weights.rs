//! Feature-weight updates by noise injection.
//!
//! The weight posterior is Gaussian with precision `Λ_e ⊗ (XᵀX + λI)`, far too
//! large to factor for realistic feature counts. Instead a draw is obtained
//! as the solution of
//!
//! ```text
//! (XᵀX + λI) β̃ = Xᵀ(U + E₁) + √λ E₂
//! ```
//!
//! where the rows of `E₁` and `E₂` are i.i.d. `N(0, Λ_e⁻¹)`. The mean of `β̃`
//! is the ridge solution and its covariance is `Λ_e⁻¹ ⊗ (XᵀX + λI)⁻¹`, which
//! is exactly the conditional. Only products with `X` and `Xᵀ` are needed,
//! so sparse features can be handled with conjugate gradient.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use super::{CgSettings, CgStats, Solver};
use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::numerics::{cholesky_psd, solve_cg};

/// `weight·XᵀX + λI`, applied matrix-free or assembled for a direct solve.
struct RidgeSystem<'a> {
    x: &'a FeatureMatrix,
    weight: f64,
    lambda: f64,
}

impl RidgeSystem<'_> {
    fn apply(&self, v: &DVector<f64>, out: &mut DVector<f64>) {
        let mut xv = DVector::zeros(self.x.nrows());
        self.x.mul_vec(v, &mut xv);
        self.x.tr_mul_vec(&xv, out);
        *out *= self.weight;
        out.axpy(self.lambda, v, 1.0);
    }

    fn solve(
        &self,
        rhs: &DMatrix<f64>,
        solver: Solver,
        cg: &CgSettings,
    ) -> Result<(DMatrix<f64>, CgStats, bool)> {
        match solver.resolve(self.x) {
            Solver::Cg => {
                let maxiter = cg.maxiter_for(self.x.ncols());
                let outcomes: Vec<_> = (0..rhs.ncols())
                    .into_par_iter()
                    .map(|k| {
                        solve_cg(
                            |v, o| self.apply(v, o),
                            &rhs.column(k).into_owned(),
                            cg.tol,
                            maxiter,
                        )
                    })
                    .collect();
                let mut stats = CgStats::default();
                let mut out = DMatrix::zeros(rhs.nrows(), rhs.ncols());
                for (k, o) in outcomes.into_iter().enumerate() {
                    stats.solves += 1;
                    stats.iterations += o.iterations;
                    stats.max_residual = stats.max_residual.max(o.residual);
                    if !o.converged {
                        stats.nonconverged += 1;
                        log::warn!(
                            "conjugate gradient stopped after {} iterations at relative residual {:e}",
                            o.iterations,
                            o.residual
                        );
                    }
                    out.set_column(k, &o.solution);
                }
                Ok((out, stats, false))
            }
            _ => {
                let mut a = self.x.gram() * self.weight;
                for i in 0..a.nrows() {
                    a[(i, i)] += self.lambda;
                }
                let factor = cholesky_psd(&a)?;
                Ok((factor.solve(rhs), CgStats::default(), factor.jitter() > 0.0))
            }
        }
    }
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "weight precision must be positive, got {lambda}"
        )));
    }
    Ok(())
}

/// Entity weights from explicitly supplied noise: solves
/// `(XᵀX + λI) β̃ = Xᵀ(U + E₁) + √λ E₂`. With `E₁ = E₂ = 0` the result is the
/// ridge posterior mean.
///
/// `u_res` is `N × D` (rows `u_i − μ_e`), `e1` is `N × D`, `e2` is `F × D`.
/// The boolean is true when the direct factorization needed jitter.
pub fn beta_entity_from_noise(
    x: &FeatureMatrix,
    u_res: &DMatrix<f64>,
    e1: &DMatrix<f64>,
    e2: &DMatrix<f64>,
    lambda: f64,
    solver: Solver,
    cg: &CgSettings,
) -> Result<(DMatrix<f64>, CgStats, bool)> {
    check_lambda(lambda)?;
    let (n, f, d) = (x.nrows(), x.ncols(), u_res.ncols());
    if u_res.nrows() != n || e1.shape() != (n, d) || e2.shape() != (f, d) {
        return Err(Error::Dimension(format!(
            "noise-injection shapes: X {n}x{f}, U {:?}, E1 {:?}, E2 {:?}",
            u_res.shape(),
            e1.shape(),
            e2.shape()
        )));
    }
    let rhs = x.tr_mul(&(u_res + e1)) + e2 * lambda.sqrt();
    RidgeSystem {
        x,
        weight: 1.0,
        lambda,
    }
    .solve(&rhs, solver, cg)
}

/// Relation weights from explicitly supplied standard normal noise: solves
/// `(αXᵀX + λI) β̃ = Xᵀ(α r + √α e₁) + √λ e₂`, whose solution has mean
/// `(αXᵀX + λI)⁻¹ αXᵀr` and covariance `(αXᵀX + λI)⁻¹`.
#[allow(clippy::too_many_arguments)]
pub fn beta_relation_from_noise(
    x: &FeatureMatrix,
    residual: &DVector<f64>,
    alpha: f64,
    e1: &DVector<f64>,
    e2: &DVector<f64>,
    lambda: f64,
    solver: Solver,
    cg: &CgSettings,
) -> Result<(DVector<f64>, CgStats, bool)> {
    check_lambda(lambda)?;
    let (n, f) = (x.nrows(), x.ncols());
    if residual.len() != n || e1.len() != n || e2.len() != f {
        return Err(Error::Dimension(format!(
            "relation noise-injection shapes: X {n}x{f}, r {}, e1 {}, e2 {}",
            residual.len(),
            e1.len(),
            e2.len()
        )));
    }
    let target = residual * alpha + e1 * alpha.sqrt();
    let noise = DMatrix::from_column_slice(f, 1, (e2 * lambda.sqrt()).as_slice());
    let rhs = x.tr_mul(&DMatrix::from_column_slice(n, 1, target.as_slice())) + noise;
    let (sol, stats, jit) = RidgeSystem {
        x,
        weight: alpha,
        lambda,
    }
    .solve(&rhs, solver, cg)?;
    Ok((sol.column(0).into_owned(), stats, jit))
}

/// Gamma conditional `(μ̃, ν̃)` of an entity weight precision:
/// `ν̃ = F·D + ν`, `μ̃ = (F·D + ν)μ / (ν + μ·tr(βᵀβΛ))`.
pub fn lambda_beta_entity_posterior(
    beta: &DMatrix<f64>,
    lambda: &DMatrix<f64>,
    mu: f64,
    nu: f64,
) -> (f64, f64) {
    let fd = (beta.nrows() * beta.ncols()) as f64;
    let trace = (beta.tr_mul(beta) * lambda).trace();
    let nu_t = fd + nu;
    (nu_t * mu / (nu + mu * trace), nu_t)
}

/// Gamma conditional `(μ̃, ν̃)` of a relation weight precision:
/// `ν̃ = F + ν`, `μ̃ = (F + ν)μ / (ν + μ·βᵀβ)`.
pub fn lambda_beta_relation_posterior(beta: &DVector<f64>, mu: f64, nu: f64) -> (f64, f64) {
    let nu_t = beta.len() as f64 + nu;
    (nu_t * mu / (nu + mu * beta.norm_squared()), nu_t)
}
