//! Fixtures shared by the benchmarks.

use macau_core::numerics::standard_normal_matrix;
use macau_core::synthetic::{feature_linked_latents, observe, random_cells};
use macau_core::{FeatureMatrix, HyperParams, Model, RngStream};
use nalgebra::DMatrix;

/// Rows × cols matrix relation of rank-3 data, optionally with dense row features.
pub fn matrix_model(
    rows: usize,
    cols: usize,
    n_obs: usize,
    latent_dim: usize,
    row_features: Option<usize>,
) -> Model {
    let mut rng = RngStream::new(1, 0).rng();
    let (row_latents, features) = match row_features {
        Some(f) => {
            let g = feature_linked_latents(rows, f, 3, 0.3, &mut rng);
            (g.latents, Some(FeatureMatrix::Dense(g.features)))
        }
        None => (standard_normal_matrix(3, rows, &mut rng), None),
    };
    let col_latents = standard_normal_matrix(3, cols, &mut rng);
    let cells = random_cells(&[rows, cols], n_obs, &mut rng);
    let data = observe(&[row_latents, col_latents], cells, 0.1, &mut rng);
    let mut model = Model::new(HyperParams::new(latent_dim));
    model.add_entity("rows", rows, features).unwrap();
    model.add_entity("cols", cols, None).unwrap();
    model
        .add_relation("r", &["rows", "cols"], data.observations, 100.0, None)
        .unwrap();
    model
}

/// Dense `n × f` feature matrix with an `n × d` right-hand side.
pub fn ridge_problem(n: usize, f: usize, d: usize) -> (FeatureMatrix, DMatrix<f64>) {
    let mut rng = RngStream::new(2, 0).rng();
    (
        FeatureMatrix::Dense(standard_normal_matrix(n, f, &mut rng)),
        standard_normal_matrix(n, d, &mut rng),
    )
}
