use nalgebra::{DMatrix, DVector};

use crate::model::{Model, Relation};

/// Sampled quantities of one entity.
#[derive(Debug, Clone, PartialEq)]
pub struct EntityState {
    /// `D × N` latent matrix; column `i` is the latent vector of instance `i`.
    pub latent: DMatrix<f64>,
    pub mu: DVector<f64>,
    pub lambda: DMatrix<f64>,
    /// `F × D` feature weights (entities with features only).
    pub beta: Option<DMatrix<f64>>,
    pub lambda_beta: f64,
    /// Cached `βᵀ x_i` per instance as a `D × N` matrix.
    pub feature_mean: Option<DMatrix<f64>>,
}

/// Sampled quantities of one relation.
#[derive(Debug, Clone, PartialEq)]
pub struct RelationState {
    pub beta: Option<DVector<f64>>,
    pub lambda_beta: f64,
    /// Cached `β_Rᵀ x_j` per observation.
    pub feature_offset: Option<DVector<f64>>,
}

/// One iterate of the chain.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplerState {
    pub entities: Vec<EntityState>,
    pub relations: Vec<RelationState>,
    pub iteration: usize,
}

impl SamplerState {
    /// Zero latents and weights, `μ = 0`, `Λ = I`, weight precisions at the
    /// hyperprior mean.
    pub fn init(model: &Model) -> Self {
        let d = model.latent_dim();
        let lambda_beta = model.hyper().gamma_mu;
        let entities = model
            .entities()
            .iter()
            .map(|e| {
                let f = e.num_features();
                EntityState {
                    latent: DMatrix::zeros(d, e.count()),
                    mu: DVector::zeros(d),
                    lambda: DMatrix::identity(d, d),
                    beta: (f > 0).then(|| DMatrix::zeros(f, d)),
                    lambda_beta,
                    feature_mean: (f > 0).then(|| DMatrix::zeros(d, e.count())),
                }
            })
            .collect();
        let relations = model
            .relations()
            .iter()
            .map(|r| {
                let f = r.num_features();
                RelationState {
                    beta: (f > 0).then(|| DVector::zeros(f)),
                    lambda_beta,
                    feature_offset: (f > 0).then(|| DVector::zeros(r.len())),
                }
            })
            .collect();
        Self {
            entities,
            relations,
            iteration: 0,
        }
    }

    /// `1ᵀ (u_{j1} ∘ … ∘ u_{jk})` for a cell of `relation`.
    pub fn latent_product_sum(&self, relation: &Relation, cell: &[usize]) -> f64 {
        let d = self.entities.first().map_or(0, |e| e.latent.nrows());
        (0..d)
            .map(|k| {
                relation
                    .entities()
                    .iter()
                    .zip(cell)
                    .map(|(e, &i)| self.entities[e.0].latent[(k, i)])
                    .product::<f64>()
            })
            .sum()
    }

    /// Largest relative deviation of the cached feature terms from a fresh
    /// recomputation.
    pub fn cache_error(&self, model: &Model) -> f64 {
        let mut worst = 0.0f64;
        let rel = |cached: &[f64], fresh: &[f64]| {
            let scale = fresh.iter().fold(1e-300f64, |m, v| m.max(v.abs()));
            cached
                .iter()
                .zip(fresh)
                .fold(0.0f64, |m, (a, b)| m.max((a - b).abs() / scale))
        };
        for (ent, st) in model.entities().iter().zip(&self.entities) {
            if let (Some(x), Some(beta), Some(cache)) = (ent.features(), &st.beta, &st.feature_mean)
            {
                let fresh = x.mul(beta).transpose();
                worst = worst.max(rel(cache.as_slice(), fresh.as_slice()));
            }
        }
        for (r, st) in model.relations().iter().zip(&self.relations) {
            if let (Some(x), Some(beta), Some(cache)) = (r.features(), &st.beta, &st.feature_offset)
            {
                let mut fresh = DVector::zeros(r.len());
                x.mul_vec(beta, &mut fresh);
                worst = worst.max(rel(cache.as_slice(), fresh.as_slice()));
            }
        }
        worst
    }
}
