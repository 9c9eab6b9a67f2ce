//! Model assembly and repeated runs.

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::path::PathBuf;
use std::time::Instant;

use macau_core::predict::write_predictions_csv;
use macau_core::{
    load_features, load_observations, rmse, CgSettings, FeatureMatrix, HyperParams, Model,
    Observation, OutputTransform, PredictionQuery, QueryAccumulator, RelationId, RngStream,
    SampleSink, Sampler, SamplerConfig, SamplerState, ValidationReport,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{RunConfig, Vary};
use crate::error::{CliError, Result};
use crate::split::{holdout, split_stream};

const CHAIN_STREAM: u64 = 0xc4a1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CgReport {
    pub solves: usize,
    pub iterations: usize,
    pub nonconverged: usize,
    pub max_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepetitionReport {
    pub repetition: usize,
    pub seed: u64,
    /// Test RMSE per relation with a test set.
    pub rmse: BTreeMap<String, f64>,
    pub test_cells: BTreeMap<String, usize>,
    pub prediction_files: BTreeMap<String, PathBuf>,
    pub final_train_rmse: f64,
    pub samples: usize,
    pub sweep_seconds: Vec<f64>,
    pub mean_sweep_seconds: f64,
    pub cg: CgReport,
    pub jitter_events: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RmseSummary {
    pub values: Vec<f64>,
    pub mean: f64,
    /// Sample standard deviation; absent for a single repetition.
    pub std: Option<f64>,
}

impl RmseSummary {
    pub fn from_values(values: Vec<f64>) -> Self {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let std = (values.len() > 1)
            .then(|| (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt());
        Self { values, mean, std }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub latent_dim: usize,
    pub total: usize,
    pub burnin: usize,
    pub seed: u64,
    pub repetitions: Vec<RepetitionReport>,
    pub summary: BTreeMap<String, RmseSummary>,
}

struct LoadedRelation {
    observations: Vec<Observation>,
    features: Option<FeatureMatrix>,
    test: Option<(Vec<Observation>, Option<FeatureMatrix>)>,
}

struct Dataset {
    entity_features: Vec<Option<FeatureMatrix>>,
    relations: Vec<LoadedRelation>,
}

fn load_dataset(config: &RunConfig) -> Result<Dataset> {
    let entity_features = config
        .entities
        .iter()
        .map(|e| {
            e.features
                .as_ref()
                .map(|p| load_features(config.resolve(p), e.feature_format.into()))
                .transpose()
        })
        .collect::<Result<_, _>>()?;
    let mut relations = Vec::with_capacity(config.relations.len());
    for r in &config.relations {
        let degree = r.entities.len();
        let observations = load_observations(config.resolve(&r.observations), degree)?;
        let features = r
            .features
            .as_ref()
            .map(|p| load_features(config.resolve(p), r.feature_format.into()))
            .transpose()?;
        let test = match &r.test {
            Some(p) => {
                let t = load_observations(config.resolve(p), degree)?;
                let f = r
                    .test_features
                    .as_ref()
                    .map(|p| load_features(config.resolve(p), r.feature_format.into()))
                    .transpose()?;
                Some((t, f))
            }
            None => None,
        };
        relations.push(LoadedRelation {
            observations,
            features,
            test,
        });
    }
    Ok(Dataset {
        entity_features,
        relations,
    })
}

struct RelationSplit {
    train: Vec<Observation>,
    train_features: Option<FeatureMatrix>,
    test: Option<(Vec<Observation>, Option<FeatureMatrix>)>,
}

fn make_split(config: &RunConfig, data: &Dataset, round: usize) -> Result<Vec<RelationSplit>> {
    let mut out = Vec::with_capacity(data.relations.len());
    for (k, (spec, rel)) in config.relations.iter().zip(&data.relations).enumerate() {
        let split = match spec.holdout {
            Some(fraction) => {
                let (train_ix, test_ix) = holdout(
                    rel.observations.len(),
                    fraction,
                    &split_stream(config.sampler.seed, k, round),
                )?;
                let pick = |ix: &[usize]| {
                    ix.iter()
                        .map(|&i| rel.observations[i].clone())
                        .collect::<Vec<_>>()
                };
                RelationSplit {
                    train: pick(&train_ix),
                    train_features: rel.features.as_ref().map(|f| f.select_rows(&train_ix)),
                    test: Some((
                        pick(&test_ix),
                        rel.features.as_ref().map(|f| f.select_rows(&test_ix)),
                    )),
                }
            }
            None => {
                if let Some((test, _)) = &rel.test {
                    let train: HashSet<&[usize]> = rel
                        .observations
                        .iter()
                        .map(|o| o.index.as_slice())
                        .collect();
                    if let Some(o) = test.iter().find(|o| train.contains(o.index.as_slice())) {
                        let cell: Vec<usize> = o.index.iter().map(|i| i + 1).collect();
                        return Err(CliError::Validation(format!(
                            "relation `{}`: test cell {cell:?} also appears in the training observations",
                            spec.name
                        )));
                    }
                }
                RelationSplit {
                    train: rel.observations.clone(),
                    train_features: rel.features.clone(),
                    test: rel.test.clone(),
                }
            }
        };
        out.push(split);
    }
    Ok(out)
}

fn assemble(
    config: &RunConfig,
    entity_features: &[Option<FeatureMatrix>],
    relations: Vec<(Vec<Observation>, Option<FeatureMatrix>)>,
) -> Result<Model> {
    let mut model = Model::new(HyperParams::new(config.sampler.latent_dim));
    for (spec, features) in config.entities.iter().zip(entity_features) {
        model.add_entity(&spec.name, spec.count, features.clone())?;
    }
    for (spec, (obs, features)) in config.relations.iter().zip(relations) {
        let names: Vec<&str> = spec.entities.iter().map(String::as_str).collect();
        model.add_relation(&spec.name, &names, obs, spec.alpha, features)?;
    }
    Ok(model)
}

/// Builds the model on the complete observation files, without splitting.
pub fn build_model(config: &RunConfig) -> Result<Model> {
    let data = load_dataset(config)?;
    let rels = data
        .relations
        .into_iter()
        .map(|r| (r.observations, r.features))
        .collect();
    assemble(config, &data.entity_features, rels)
}

/// Loads all files and runs structural validation.
pub fn validate(config: &RunConfig) -> Result<ValidationReport> {
    Ok(build_model(config)?.validate())
}

struct MultiSink(Vec<(usize, QueryAccumulator)>);

impl SampleSink for MultiSink {
    fn consume(&mut self, model: &Model, state: &SamplerState) -> macau_core::Result<()> {
        self.0
            .iter_mut()
            .try_for_each(|(_, q)| q.consume(model, state))
    }
}

fn sampler_config(config: &RunConfig, seed: u64) -> SamplerConfig {
    let mut sc = SamplerConfig {
        total: config.sampler.total,
        burnin: config.sampler.burnin,
        seed,
        cg: CgSettings {
            tol: config.sampler.cg_tol,
            maxiter: config.sampler.cg_maxiter,
        },
        ..SamplerConfig::default()
    };
    for e in &config.entities {
        sc.entity_solvers.insert(e.name.clone(), e.solver.into());
    }
    for r in &config.relations {
        sc.relation_solvers.insert(r.name.clone(), r.solver.into());
    }
    sc
}

/// Chain seed of repetition `rep`.
pub fn repetition_seed(seed: u64, rep: usize) -> u64 {
    RngStream::new(seed, CHAIN_STREAM)
        .derive(&[rep as u64])
        .stream()
}

fn run_repetition(config: &RunConfig, data: &Dataset, rep: usize) -> Result<RepetitionReport> {
    let start = Instant::now();
    let round = match config.options.vary {
        Vary::Seed => 0,
        Vary::Split => rep,
    };
    let splits = make_split(config, data, round)?;
    let mut offsets = Vec::with_capacity(splits.len());
    let mut train_sets = Vec::with_capacity(splits.len());
    let mut tests = Vec::new();
    for (k, s) in splits.into_iter().enumerate() {
        let offset = if config.options.center {
            s.train.iter().map(|o| o.value).sum::<f64>() / s.train.len().max(1) as f64
        } else {
            0.0
        };
        let train: Vec<Observation> = s
            .train
            .into_iter()
            .map(|o| Observation::new(o.index, o.value - offset))
            .collect();
        offsets.push(offset);
        train_sets.push((train, s.train_features));
        if let Some(t) = s.test {
            tests.push((k, t));
        }
    }
    let model = assemble(config, &data.entity_features, train_sets)?;

    let mut sink = MultiSink(Vec::new());
    for (k, (obs, features)) in tests {
        let cells = obs.iter().map(|o| o.index.clone()).collect();
        let truth = obs.iter().map(|o| o.value).collect();
        let query = PredictionQuery::new(&model, RelationId(k), cells, Some(truth), features)?;
        sink.0.push((k, QueryAccumulator::new(query)));
    }

    let seed = repetition_seed(config.sampler.seed, rep);
    log::info!("repetition {}: sampling with seed {seed}", rep + 1);
    let sampler = Sampler::new(&model, sampler_config(config, seed))?;
    let (summary, _) = sampler.run(&mut sink)?;

    let out_dir = config.output_dir();
    fs::create_dir_all(&out_dir).map_err(|e| CliError::io(&out_dir, e))?;
    let mut report = RepetitionReport {
        repetition: rep,
        seed,
        rmse: BTreeMap::new(),
        test_cells: BTreeMap::new(),
        prediction_files: BTreeMap::new(),
        final_train_rmse: summary.train_rmse.last().copied().unwrap_or(f64::NAN),
        samples: summary.samples,
        mean_sweep_seconds: summary.sweep_seconds.iter().sum::<f64>()
            / summary.sweep_seconds.len().max(1) as f64,
        sweep_seconds: summary.sweep_seconds,
        cg: CgReport {
            solves: summary.cg.solves,
            iterations: summary.cg.iterations,
            nonconverged: summary.cg.nonconverged,
            max_residual: summary.cg.max_residual,
        },
        jitter_events: summary.jitter_events,
    };
    for (k, q) in &sink.0 {
        let name = &config.relations[*k].name;
        let transform = OutputTransform {
            offset: offsets[*k],
            clamp: config.options.clamp.map(|[lo, hi]| (lo, hi)),
        };
        let means = transform.apply(&q.acc.means())?;
        let err = rmse(&means, q.query.truth.as_deref().unwrap_or_default())?;
        let path = out_dir.join(format!("predictions_{name}_rep{}.csv", rep + 1));
        let mut buf = Vec::new();
        write_predictions_csv(&mut buf, &q.query, &q.acc, &transform)
            .map_err(|e| CliError::io(&path, e))?;
        fs::write(&path, buf).map_err(|e| CliError::io(&path, e))?;
        log::info!("repetition {}: {name} test RMSE {err:.5}", rep + 1);
        report.rmse.insert(name.clone(), err);
        report.test_cells.insert(name.clone(), q.query.len());
        report.prediction_files.insert(name.clone(), path);
    }
    log::info!(
        "repetition {} done in {:.1}s",
        rep + 1,
        start.elapsed().as_secs_f64()
    );
    Ok(report)
}

/// Runs every repetition, writes prediction CSVs and `report.json` into the
/// output directory and returns the report.
pub fn run(config: &RunConfig) -> Result<RunReport> {
    let data = load_dataset(config)?;
    {
        let rels = data
            .relations
            .iter()
            .map(|r| (r.observations.clone(), r.features.clone()))
            .collect();
        let findings = assemble(config, &data.entity_features, rels)?.validate();
        if !findings.ok() {
            let text: Vec<String> = findings.findings.iter().map(|f| f.message()).collect();
            return Err(CliError::Validation(text.join("\n")));
        }
    }
    let reps = config.options.repetitions;
    let repetitions: Vec<RepetitionReport> = if config.options.parallel_repetitions {
        (0..reps)
            .into_par_iter()
            .map(|rep| run_repetition(config, &data, rep))
            .collect::<Result<_>>()?
    } else {
        (0..reps)
            .map(|rep| run_repetition(config, &data, rep))
            .collect::<Result<_>>()?
    };

    let mut summary = BTreeMap::new();
    for spec in config.relations.iter().filter(|r| r.has_test()) {
        let values = repetitions.iter().map(|r| r.rmse[&spec.name]).collect();
        summary.insert(spec.name.clone(), RmseSummary::from_values(values));
    }
    let report = RunReport {
        latent_dim: config.sampler.latent_dim,
        total: config.sampler.total,
        burnin: config.sampler.burnin,
        seed: config.sampler.seed,
        repetitions,
        summary,
    };
    let out_dir = config.output_dir();
    fs::create_dir_all(&out_dir).map_err(|e| CliError::io(&out_dir, e))?;
    let path = out_dir.join("report.json");
    let json = serde_json::to_string_pretty(&report).map_err(|e| CliError::Input(e.to_string()))?;
    fs::write(&path, json).map_err(|e| CliError::io(&path, e))?;
    Ok(report)
}
