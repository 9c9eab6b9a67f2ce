//! Gibbs sampler over latent vectors, latent priors, feature weights and
//! weight precisions.
//!
//! One sweep ([`Sampler::gibbs_step`]) visits, for every entity in model
//! order: all latent vectors (in parallel blocks), the feature weights `β_e`,
//! their precision `λ_β`, and the Normal-Wishart prior `(μ_e, Λ_e)`; then for
//! every relation with features its weights `β_R` and precision.

mod index;
mod latent;
mod prior;
mod sampler;
mod state;
mod weights;

pub use prior::NormalWishartParams;
pub use sampler::{run_sampler, PosteriorSummary, SampleSink, Sampler, StepStats};
pub use state::{EntityState, RelationState, SamplerState};
pub use weights::{
    beta_entity_from_noise, beta_relation_from_noise, lambda_beta_entity_posterior,
    lambda_beta_relation_posterior,
};

use std::collections::HashMap;

use crate::features::FeatureMatrix;

/// Largest dense feature dimension solved with a direct factorization under
/// [`Solver::Auto`].
pub const DIRECT_SOLVER_MAX_FEATURES: usize = 20_000;

/// Linear solver used for the feature-weight systems.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Solver {
    /// Direct for dense features up to [`DIRECT_SOLVER_MAX_FEATURES`], CG otherwise.
    #[default]
    Auto,
    Direct,
    Cg,
}

impl Solver {
    pub fn resolve(self, features: &FeatureMatrix) -> Solver {
        match self {
            Solver::Auto => {
                if !features.is_sparse() && features.ncols() <= DIRECT_SOLVER_MAX_FEATURES {
                    Solver::Direct
                } else {
                    Solver::Cg
                }
            }
            s => s,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CgSettings {
    /// Relative residual target.
    pub tol: f64,
    /// Iteration cap; `None` means `min(F, 1000)`.
    pub maxiter: Option<usize>,
}

impl Default for CgSettings {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            maxiter: None,
        }
    }
}

impl CgSettings {
    pub fn maxiter_for(&self, dim: usize) -> usize {
        self.maxiter.unwrap_or_else(|| dim.clamp(1, 1000))
    }
}

/// Conjugate gradient bookkeeping, summed over solves.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CgStats {
    pub solves: usize,
    pub iterations: usize,
    pub nonconverged: usize,
    pub max_residual: f64,
}

impl CgStats {
    pub fn merge(&mut self, other: &CgStats) {
        self.solves += other.solves;
        self.iterations += other.iterations;
        self.nonconverged += other.nonconverged;
        self.max_residual = self.max_residual.max(other.max_residual);
    }
}

#[derive(Debug, Clone)]
pub struct SamplerConfig {
    pub total: usize,
    pub burnin: usize,
    pub seed: u64,
    /// Per-entity solver override, keyed by entity name.
    pub entity_solvers: HashMap<String, Solver>,
    /// Per-relation solver override, keyed by relation name.
    pub relation_solvers: HashMap<String, Solver>,
    pub cg: CgSettings,
    /// Observations used for the per-sweep training RMSE.
    pub train_rmse_cap: usize,
    /// Instances per parallel latent block. Each block owns one random stream,
    /// so results do not depend on the thread count.
    pub block_size: usize,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            total: 1000,
            burnin: 800,
            seed: 0,
            entity_solvers: HashMap::new(),
            relation_solvers: HashMap::new(),
            cg: CgSettings::default(),
            train_rmse_cap: 100_000,
            block_size: 64,
        }
    }
}
