//! Data drawn from the factorization model itself, for tests and benchmarks.

use std::collections::HashSet;

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::model::Observation;
use crate::numerics::standard_normal_matrix;

/// Observed cells of a low-rank tensor plus the generating latents.
#[derive(Debug, Clone)]
pub struct SyntheticTensor {
    /// One `rank × N_m` matrix per mode.
    pub latents: Vec<DMatrix<f64>>,
    pub observations: Vec<Observation>,
    /// Noise-free values, aligned with `observations`.
    pub signal: Vec<f64>,
}

/// `n_obs` distinct uniformly chosen cells of a `dims`-shaped array.
pub fn random_cells<R: Rng + ?Sized>(dims: &[usize], n_obs: usize, rng: &mut R) -> Vec<Vec<usize>> {
    let total: usize = dims.iter().product();
    assert!(n_obs <= total, "{n_obs} cells requested from {total}");
    let mut seen = HashSet::with_capacity(n_obs);
    let mut cells = Vec::with_capacity(n_obs);
    while cells.len() < n_obs {
        let cell: Vec<usize> = dims.iter().map(|&d| rng.random_range(0..d)).collect();
        if seen.insert(cell.clone()) {
            cells.push(cell);
        }
    }
    cells
}

/// Values `1ᵀ(u_{j1} ∘ … ∘ u_{jk}) + noise` at the given cells.
pub fn observe<R: Rng + ?Sized>(
    latents: &[DMatrix<f64>],
    cells: Vec<Vec<usize>>,
    noise_sd: f64,
    rng: &mut R,
) -> SyntheticTensor {
    let rank = latents[0].nrows();
    let mut observations = Vec::with_capacity(cells.len());
    let mut signal = Vec::with_capacity(cells.len());
    for cell in cells {
        let clean: f64 = (0..rank)
            .map(|k| {
                cell.iter()
                    .zip(latents)
                    .map(|(&i, u)| u[(k, i)])
                    .product::<f64>()
            })
            .sum();
        let noise: f64 = StandardNormal.sample(rng);
        signal.push(clean);
        observations.push(Observation::new(cell, clean + noise_sd * noise));
    }
    SyntheticTensor {
        latents: latents.to_vec(),
        observations,
        signal,
    }
}

/// Low-rank tensor with standard normal latents and `n_obs` noisy cells.
pub fn low_rank_tensor<R: Rng + ?Sized>(
    dims: &[usize],
    rank: usize,
    n_obs: usize,
    noise_sd: f64,
    rng: &mut R,
) -> SyntheticTensor {
    let latents: Vec<DMatrix<f64>> = dims
        .iter()
        .map(|&n| standard_normal_matrix(rank, n, rng))
        .collect();
    let cells = random_cells(dims, n_obs, rng);
    observe(&latents, cells, noise_sd, rng)
}

/// Row latents that are a linear function of dense features plus noise.
#[derive(Debug, Clone)]
pub struct FeatureLinkedLatents {
    /// `N × F` features.
    pub features: DMatrix<f64>,
    /// `F × rank` true weights.
    pub weights: DMatrix<f64>,
    /// `rank × N` latents, `Wᵀx_i + noise`.
    pub latents: DMatrix<f64>,
}

pub fn feature_linked_latents<R: Rng + ?Sized>(
    n: usize,
    n_features: usize,
    rank: usize,
    latent_noise_sd: f64,
    rng: &mut R,
) -> FeatureLinkedLatents {
    let features = standard_normal_matrix(n, n_features, rng);
    let weights = standard_normal_matrix(n_features, rank, rng) / (n_features as f64).sqrt();
    let noise = standard_normal_matrix(rank, n, rng) * latent_noise_sd;
    let latents = (&features * &weights).transpose() + noise;
    FeatureLinkedLatents {
        features,
        weights,
        latents,
    }
}
