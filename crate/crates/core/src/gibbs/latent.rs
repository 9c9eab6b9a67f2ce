use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rayon::prelude::*;

use super::index::ModelIndex;
use super::state::SamplerState;
use crate::error::Result;
use crate::model::Model;
use crate::numerics::{cholesky_psd, sample_mvnormal_factored};
use crate::rng::RngStream;

/// Conditional precision `Λ*` and the vector `b` with `μ* = Λ*⁻¹ b` for the
/// latent vector of instance `i` of entity `e`.
pub(crate) fn conditional_terms(
    model: &Model,
    index: &ModelIndex,
    state: &SamplerState,
    lambda_mu: &DVector<f64>,
    e: usize,
    i: usize,
) -> (DMatrix<f64>, DVector<f64>) {
    let ent = &state.entities[e];
    let d = ent.mu.len();
    let mut prec_lower = ent.lambda.clone();
    let mut b = lambda_mu.clone();
    if let Some(fm) = &ent.feature_mean {
        b += &ent.lambda * fm.column(i);
    }

    let mut q = DVector::zeros(d);
    for &(r, mode) in &index.links[e] {
        let rel = model.relation(crate::model::RelationId(r));
        let alpha = rel.alpha();
        let offsets = state.relations[r].feature_offset.as_ref();
        for &j in index.mode(r, mode).observations(i) {
            let cell = rel.cell(j);
            // product over the other modes; no division by u_i
            q.fill(1.0);
            for (m, (&other, &ix)) in rel.entities().iter().zip(cell).enumerate() {
                if m != mode {
                    q.component_mul_assign(&state.entities[other.0].latent.column(ix));
                }
            }
            let target = rel.value(j) - offsets.map_or(0.0, |o| o[j]);
            for a in 0..d {
                let aq = alpha * q[a];
                for c in 0..=a {
                    prec_lower[(a, c)] += aq * q[c];
                }
                b[a] += aq * target;
            }
        }
    }

    // accumulated lower triangle only; mirror for an exactly symmetric matrix
    for a in 0..d {
        for c in 0..a {
            prec_lower[(c, a)] = prec_lower[(a, c)];
        }
    }
    (prec_lower, b)
}

pub(crate) fn latent_conditional(
    model: &Model,
    index: &ModelIndex,
    state: &SamplerState,
    e: usize,
    i: usize,
) -> Result<(DMatrix<f64>, DVector<f64>)> {
    let ent = &state.entities[e];
    let lambda_mu = &ent.lambda * &ent.mu;
    let (prec, b) = conditional_terms(model, index, state, &lambda_mu, e, i);
    let mean = cholesky_psd(&prec)?.solve_vec(&b);
    Ok((prec, mean))
}

pub(crate) fn sample_latent<R: Rng + ?Sized>(
    model: &Model,
    index: &ModelIndex,
    state: &SamplerState,
    lambda_mu: &DVector<f64>,
    e: usize,
    i: usize,
    rng: &mut R,
) -> Result<(DVector<f64>, bool)> {
    let (prec, b) = conditional_terms(model, index, state, lambda_mu, e, i);
    let factor = cholesky_psd(&prec)?;
    let mean = factor.solve_vec(&b);
    Ok((
        sample_mvnormal_factored(&mean, &factor, rng),
        factor.jitter() > 0.0,
    ))
}

pub(crate) const TAG_LATENT: u64 = 1;

/// Resamples every latent vector of entity `e`. Returns the number of
/// factorizations that needed jitter.
pub(crate) fn sample_entity_latents(
    model: &Model,
    index: &ModelIndex,
    state: &mut SamplerState,
    e: usize,
    stream: &RngStream,
    block_size: usize,
) -> Result<usize> {
    let n = state.entities[e].latent.ncols();
    let block_size = block_size.max(1);
    let blocks = n.div_ceil(block_size);
    let snapshot: &SamplerState = state;
    let lambda_mu = &snapshot.entities[e].lambda * &snapshot.entities[e].mu;

    let drawn: Vec<(Vec<DVector<f64>>, usize)> = (0..blocks)
        .into_par_iter()
        .map(|blk| {
            let mut rng = stream.derive(&[TAG_LATENT, e as u64, blk as u64]).rng();
            let lo = blk * block_size;
            let hi = (lo + block_size).min(n);
            let mut out = Vec::with_capacity(hi - lo);
            let mut jitter = 0;
            for i in lo..hi {
                let (u, jit) = sample_latent(model, index, snapshot, &lambda_mu, e, i, &mut rng)?;
                jitter += jit as usize;
                out.push(u);
            }
            Ok((out, jitter))
        })
        .collect::<Result<_>>()?;

    let latent = &mut state.entities[e].latent;
    let mut jitter_events = 0;
    for (blk, (cols, jit)) in drawn.into_iter().enumerate() {
        jitter_events += jit;
        for (k, u) in cols.into_iter().enumerate() {
            latent.set_column(blk * block_size + k, &u);
        }
    }
    Ok(jitter_events)
}
