use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use super::index::ModelIndex;
use super::latent;
use super::prior::{normal_wishart_posterior, NormalWishartParams};
use super::state::SamplerState;
use super::weights::{
    beta_entity_from_noise, beta_relation_from_noise, lambda_beta_entity_posterior,
    lambda_beta_relation_posterior,
};
use super::{CgStats, SamplerConfig, Solver};
use crate::error::{Error, Result};
use crate::model::{EntityId, Model, RelationId};
use crate::numerics::{
    cholesky_psd, sample_gamma_mu_nu, sample_normal_rows, standard_normal_matrix,
};
use crate::rng::RngStream;

const TAG_BETA: u64 = 2;
const TAG_LAMBDA_BETA: u64 = 3;
const TAG_PRIOR: u64 = 4;
const TAG_REL_BETA: u64 = 5;
const TAG_REL_LAMBDA: u64 = 6;

/// Receives each post-burn-in iterate.
pub trait SampleSink {
    fn consume(&mut self, model: &Model, state: &SamplerState) -> Result<()>;
}

impl<F> SampleSink for F
where
    F: FnMut(&Model, &SamplerState) -> Result<()>,
{
    fn consume(&mut self, model: &Model, state: &SamplerState) -> Result<()> {
        self(model, state)
    }
}

#[derive(Debug, Clone, Default)]
pub struct StepStats {
    pub cg: CgStats,
    pub jitter_events: usize,
    pub seconds: f64,
}

#[derive(Debug, Clone, Default)]
pub struct PosteriorSummary {
    /// Training RMSE after every sweep (on at most `train_rmse_cap` cells).
    pub train_rmse: Vec<f64>,
    pub sweep_seconds: Vec<f64>,
    pub samples: usize,
    pub cg: CgStats,
    pub jitter_events: usize,
}

/// A validated model prepared for sampling.
pub struct Sampler<'m> {
    model: &'m Model,
    index: ModelIndex,
    config: SamplerConfig,
    w0_inv: DMatrix<f64>,
    entity_solvers: Vec<Solver>,
    relation_solvers: Vec<Solver>,
}

impl<'m> Sampler<'m> {
    pub fn new(model: &'m Model, config: SamplerConfig) -> Result<Self> {
        let report = model.validate();
        if !report.ok() {
            let msgs: Vec<String> = report.findings.iter().map(|f| f.message()).collect();
            return Err(Error::InvalidModel(msgs.join("; ")));
        }
        model.hyper().check()?;
        if config.burnin >= config.total {
            return Err(Error::InvalidParameter(format!(
                "burnin ({}) must be smaller than total ({})",
                config.burnin, config.total
            )));
        }
        for name in config.entity_solvers.keys() {
            if model.entity_id(name).is_none() {
                return Err(Error::UnknownEntity(name.clone()));
            }
        }
        let entity_solvers = model
            .entities()
            .iter()
            .map(|e| {
                config
                    .entity_solvers
                    .get(e.name())
                    .copied()
                    .unwrap_or_default()
            })
            .collect();
        let relation_solvers = model
            .relations()
            .iter()
            .map(|r| {
                config
                    .relation_solvers
                    .get(r.name())
                    .copied()
                    .unwrap_or_default()
            })
            .collect();
        let w0_inv = cholesky_psd(&model.hyper().w0)?.inverse();
        Ok(Self {
            model,
            index: ModelIndex::new(model),
            config,
            w0_inv,
            entity_solvers,
            relation_solvers,
        })
    }

    pub fn model(&self) -> &'m Model {
        self.model
    }

    pub fn config(&self) -> &SamplerConfig {
        &self.config
    }

    pub fn init_state(&self) -> SamplerState {
        SamplerState::init(self.model)
    }

    /// Conditional precision `Λ*` and mean `μ*` of one latent vector.
    pub fn latent_conditional(
        &self,
        state: &SamplerState,
        e: EntityId,
        i: usize,
    ) -> Result<(DMatrix<f64>, DVector<f64>)> {
        self.check_instance(e, i)?;
        latent::latent_conditional(self.model, &self.index, state, e.0, i)
    }

    pub fn sample_latent<R: Rng + ?Sized>(
        &self,
        state: &SamplerState,
        e: EntityId,
        i: usize,
        rng: &mut R,
    ) -> Result<DVector<f64>> {
        self.check_instance(e, i)?;
        let ent = &state.entities[e.0];
        let lambda_mu = &ent.lambda * &ent.mu;
        Ok(latent::sample_latent(self.model, &self.index, state, &lambda_mu, e.0, i, rng)?.0)
    }

    fn check_instance(&self, e: EntityId, i: usize) -> Result<()> {
        let ent = self
            .model
            .entities()
            .get(e.0)
            .ok_or_else(|| Error::UnknownEntity(format!("#{}", e.0)))?;
        if i >= ent.count() {
            return Err(Error::InvalidParameter(format!(
                "instance {i} out of range for `{}` ({} instances)",
                ent.name(),
                ent.count()
            )));
        }
        Ok(())
    }

    /// Normal-Wishart conditional of `(μ_e, Λ_e)` given the current state.
    pub fn entity_prior_posterior(&self, state: &SamplerState, e: EntityId) -> NormalWishartParams {
        let ent = &state.entities[e.0];
        let residuals = match &ent.feature_mean {
            Some(fm) => &ent.latent - fm,
            None => ent.latent.clone(),
        };
        let weights = ent.beta.as_ref().map(|b| (b, ent.lambda_beta));
        normal_wishart_posterior(self.model.hyper(), &self.w0_inv, &residuals, weights)
    }

    pub fn sample_entity_prior<R: Rng + ?Sized>(
        &self,
        state: &SamplerState,
        e: EntityId,
        rng: &mut R,
    ) -> Result<(DVector<f64>, DMatrix<f64>)> {
        self.entity_prior_posterior(state, e).sample(rng)
    }

    /// Draws `β_e` by noise injection. Fails for entities without features.
    pub fn sample_beta_entity<R: Rng + ?Sized>(
        &self,
        state: &SamplerState,
        e: EntityId,
        rng: &mut R,
    ) -> Result<(DMatrix<f64>, CgStats, bool)> {
        let ent = self.model.entity(e);
        let x = ent.features().ok_or_else(|| {
            Error::InvalidParameter(format!("entity `{}` has no features", ent.name()))
        })?;
        let st = &state.entities[e.0];
        let factor = cholesky_psd(&st.lambda)?;
        let mut u_res = st.latent.transpose();
        for mut row in u_res.row_iter_mut() {
            row -= st.mu.transpose();
        }
        let e1 = sample_normal_rows(x.nrows(), &factor, rng);
        let e2 = sample_normal_rows(x.ncols(), &factor, rng);
        beta_entity_from_noise(
            x,
            &u_res,
            &e1,
            &e2,
            st.lambda_beta,
            self.entity_solvers[e.0],
            &self.config.cg,
        )
    }

    pub fn sample_lambda_beta_entity<R: Rng + ?Sized>(
        &self,
        state: &SamplerState,
        e: EntityId,
        rng: &mut R,
    ) -> Result<f64> {
        let st = &state.entities[e.0];
        let beta = st.beta.as_ref().ok_or_else(|| {
            Error::InvalidParameter(format!(
                "entity `{}` has no features",
                self.model.entity(e).name()
            ))
        })?;
        let h = self.model.hyper();
        let (mu_t, nu_t) = lambda_beta_entity_posterior(beta, &st.lambda, h.gamma_mu, h.gamma_nu);
        sample_gamma_mu_nu(mu_t, nu_t, rng)
    }

    /// Residual targets `R_j − 1ᵀu_j` of a relation's feature regression.
    pub fn relation_residuals(&self, state: &SamplerState, r: RelationId) -> DVector<f64> {
        let rel = self.model.relation(r);
        DVector::from_fn(rel.len(), |j, _| {
            rel.value(j) - state.latent_product_sum(rel, rel.cell(j))
        })
    }

    pub fn sample_beta_relation<R: Rng + ?Sized>(
        &self,
        state: &SamplerState,
        r: RelationId,
        rng: &mut R,
    ) -> Result<(DVector<f64>, CgStats, bool)> {
        let rel = self.model.relation(r);
        let x = rel.features().ok_or_else(|| {
            Error::InvalidParameter(format!("relation `{}` has no features", rel.name()))
        })?;
        let residual = self.relation_residuals(state, r);
        let e1 = standard_normal_matrix(x.nrows(), 1, rng)
            .column(0)
            .into_owned();
        let e2 = standard_normal_matrix(x.ncols(), 1, rng)
            .column(0)
            .into_owned();
        beta_relation_from_noise(
            x,
            &residual,
            rel.alpha(),
            &e1,
            &e2,
            state.relations[r.0].lambda_beta,
            self.relation_solvers[r.0],
            &self.config.cg,
        )
    }

    pub fn sample_lambda_beta_relation<R: Rng + ?Sized>(
        &self,
        state: &SamplerState,
        r: RelationId,
        rng: &mut R,
    ) -> Result<f64> {
        let beta = state.relations[r.0].beta.as_ref().ok_or_else(|| {
            Error::InvalidParameter(format!(
                "relation `{}` has no features",
                self.model.relation(r).name()
            ))
        })?;
        let h = self.model.hyper();
        let (mu_t, nu_t) = lambda_beta_relation_posterior(beta, h.gamma_mu, h.gamma_nu);
        sample_gamma_mu_nu(mu_t, nu_t, rng)
    }

    /// One full sweep. All randomness comes from children of `stream`.
    pub fn gibbs_step(&self, state: &mut SamplerState, stream: &RngStream) -> Result<StepStats> {
        let start = Instant::now();
        let mut stats = StepStats::default();
        for (e, ent) in self.model.entities().iter().enumerate() {
            let id = EntityId(e);
            stats.jitter_events += latent::sample_entity_latents(
                self.model,
                &self.index,
                state,
                e,
                stream,
                self.config.block_size,
            )?;

            if let Some(x) = ent.features() {
                let mut rng = stream.derive(&[TAG_BETA, e as u64]).rng();
                let (beta, cg, jit) = self.sample_beta_entity(state, id, &mut rng)?;
                stats.cg.merge(&cg);
                stats.jitter_events += jit as usize;
                let st = &mut state.entities[e];
                st.feature_mean = Some(x.mul(&beta).transpose());
                st.beta = Some(beta);

                let mut rng = stream.derive(&[TAG_LAMBDA_BETA, e as u64]).rng();
                state.entities[e].lambda_beta =
                    self.sample_lambda_beta_entity(state, id, &mut rng)?;
            }

            let mut rng = stream.derive(&[TAG_PRIOR, e as u64]).rng();
            let (mu, lambda) = self.sample_entity_prior(state, id, &mut rng)?;
            let st = &mut state.entities[e];
            st.mu = mu;
            st.lambda = lambda;
        }

        for (r, rel) in self.model.relations().iter().enumerate() {
            let Some(x) = rel.features() else { continue };
            let id = RelationId(r);
            let mut rng = stream.derive(&[TAG_REL_BETA, r as u64]).rng();
            let (beta, cg, jit) = self.sample_beta_relation(state, id, &mut rng)?;
            stats.cg.merge(&cg);
            stats.jitter_events += jit as usize;
            let mut offset = DVector::zeros(rel.len());
            x.mul_vec(&beta, &mut offset);
            let st = &mut state.relations[r];
            st.feature_offset = Some(offset);
            st.beta = Some(beta);

            let mut rng = stream.derive(&[TAG_REL_LAMBDA, r as u64]).rng();
            state.relations[r].lambda_beta =
                self.sample_lambda_beta_relation(state, id, &mut rng)?;
        }

        state.iteration += 1;
        stats.seconds = start.elapsed().as_secs_f64();
        Ok(stats)
    }

    /// Training RMSE on an evenly strided subsample of at most
    /// `train_rmse_cap` observations across all relations.
    pub fn train_rmse(&self, state: &SamplerState) -> f64 {
        let total: usize = self.model.relations().iter().map(|r| r.len()).sum();
        if total == 0 {
            return 0.0;
        }
        let stride = total.div_ceil(self.config.train_rmse_cap.max(1));
        let (mut sse, mut n) = (0.0, 0usize);
        let mut pos = 0usize;
        for (r, rel) in self.model.relations().iter().enumerate() {
            let offsets = state.relations[r].feature_offset.as_ref();
            for j in 0..rel.len() {
                if pos.is_multiple_of(stride) {
                    let pred =
                        state.latent_product_sum(rel, rel.cell(j)) + offsets.map_or(0.0, |o| o[j]);
                    sse += (pred - rel.value(j)).powi(2);
                    n += 1;
                }
                pos += 1;
            }
        }
        (sse / n as f64).sqrt()
    }

    /// Root stream of the chain; sweep `t` draws from `root.derive(&[t])`.
    pub fn root_stream(&self) -> RngStream {
        RngStream::new(self.config.seed, 0)
    }

    /// Runs the configured chain from the initial state, forwarding every
    /// post-burn-in iterate to `sink`. Returns the summary and final state.
    pub fn run(&self, sink: &mut dyn SampleSink) -> Result<(PosteriorSummary, SamplerState)> {
        let mut state = self.init_state();
        let mut summary = PosteriorSummary::default();
        let root = self.root_stream();
        for t in 0..self.config.total {
            let stats = self.gibbs_step(&mut state, &root.derive(&[t as u64]))?;
            let rmse = self.train_rmse(&state);
            log::debug!(
                "sweep {}: train rmse {rmse:.5} ({:.3}s)",
                t + 1,
                stats.seconds
            );
            summary.train_rmse.push(rmse);
            summary.sweep_seconds.push(stats.seconds);
            summary.cg.merge(&stats.cg);
            summary.jitter_events += stats.jitter_events;
            if t >= self.config.burnin {
                sink.consume(self.model, &state)?;
                summary.samples += 1;
            }
        }
        Ok((summary, state))
    }
}

pub fn run_sampler(
    model: &Model,
    config: &SamplerConfig,
    sink: &mut dyn SampleSink,
) -> Result<PosteriorSummary> {
    Ok(Sampler::new(model, config.clone())?.run(sink)?.0)
}
