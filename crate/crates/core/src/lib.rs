//! Bayesian factorization of heterogeneous relational data.
//!
//! A model is a hypergraph: entities (users, drugs, proteins, ...) are the
//! nodes and relations (partially observed matrices or tensors) are the
//! hyperedges. Every entity instance carries a latent vector; a cell of a
//! relation is predicted by the sum of the element-wise product of the
//! latent vectors of the instances it links, optionally shifted by a linear
//! term in per-cell relation features.
//!
//! Posterior inference is done with a Gibbs sampler. Entity features enter
//! the latent prior mean through a weight matrix, and those weights are
//! drawn by solving a ridge system with a noise-perturbed right-hand side
//! (dense Cholesky for moderate feature counts, matrix-free conjugate
//! gradient for large sparse features).
//!
//! ```no_run
//! use macau_core::{HyperParams, Model, Observation, SamplerConfig, run_sampler};
//!
//! let mut model = Model::new(HyperParams::new(8));
//! model.add_entity("user", 100, None).unwrap();
//! model.add_entity("movie", 50, None).unwrap();
//! let obs = vec![Observation::new(vec![0, 3], 4.0)];
//! model.add_relation("ratings", &["user", "movie"], obs, 1.5, None).unwrap();
//! let summary = run_sampler(&model, &SamplerConfig::default(), &mut |_: &_, _: &_| Ok(())).unwrap();
//! println!("{:?}", summary.train_rmse.last());
//! ```

// NaN must fail the positivity checks, so `!(x > 0.0)` is intended.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod features;
pub mod gibbs;
pub mod model;
pub mod numerics;
pub mod predict;
pub mod rng;
pub mod split;
pub mod synthetic;

pub use error::{Error, Result};
pub use features::{CsrMatrix, FeatureMatrix};
pub use gibbs::{
    run_sampler, CgSettings, CgStats, EntityState, PosteriorSummary, RelationState, SampleSink,
    Sampler, SamplerConfig, SamplerState, Solver,
};
pub use model::{
    load_features, load_observations, save_observations, Entity, EntityId, FeatureFormat, Finding,
    HyperParams, Model, Observation, Relation, RelationId, ValidationReport,
};
pub use predict::{
    clamp_predictions, credibility_interval, predict_point, rmse, OutputTransform,
    PredictionAccumulator, PredictionQuery, QueryAccumulator,
};
pub use rng::RngStream;
pub use split::{holdout_indices, split_holdout};
