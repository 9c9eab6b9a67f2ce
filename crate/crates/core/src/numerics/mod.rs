//! Linear algebra and sampling kernels used by the Gibbs sampler.

mod cg;
mod cholesky;
mod sampling;

pub use cg::{solve_cg, CgOutcome};
pub use cholesky::{cholesky_psd, solve_direct, CholeskyFactor};
pub use sampling::{
    sample_gamma_mu_nu, sample_mvnormal, sample_mvnormal_factored, sample_normal_rows,
    sample_normal_wishart, sample_wishart, standard_normal_matrix,
};

use nalgebra::DMatrix;

/// Averages `a` with its transpose in place.
pub fn symmetrize(a: &mut DMatrix<f64>) {
    let n = a.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (a[(i, j)] + a[(j, i)]);
            a[(i, j)] = v;
            a[(j, i)] = v;
        }
    }
}
