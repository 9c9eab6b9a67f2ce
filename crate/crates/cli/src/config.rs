//! Run configuration files (TOML).
//!
//! ```toml
//! [sampler]
//! latent_dim = 10
//! total = 1000
//! burnin = 800
//!
//! [[entity]]
//! name = "users"
//! count = 943
//!
//! [[entity]]
//! name = "movies"
//! count = 1682
//! features = "genres.csv"
//!
//! [[relation]]
//! name = "ratings"
//! entities = ["users", "movies"]
//! observations = "ratings.txt"
//! alpha = 1.5
//! holdout = 0.2
//! ```

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use macau_core::{FeatureFormat, Solver};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub sampler: SamplerSection,
    #[serde(default)]
    pub options: Options,
    #[serde(rename = "entity")]
    pub entities: Vec<EntitySpec>,
    #[serde(rename = "relation")]
    pub relations: Vec<RelationSpec>,
    /// Directory that relative paths resolve against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplerSection {
    pub latent_dim: usize,
    #[serde(default = "default_total")]
    pub total: usize,
    #[serde(default = "default_burnin")]
    pub burnin: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_cg_tol")]
    pub cg_tol: f64,
    #[serde(default)]
    pub cg_maxiter: Option<usize>,
}

fn default_total() -> usize {
    1000
}

fn default_burnin() -> usize {
    800
}

fn default_cg_tol() -> f64 {
    1e-6
}

fn default_repetitions() -> usize {
    1
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Vary {
    #[default]
    Seed,
    Split,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Options {
    #[serde(default)]
    pub clamp: Option<[f64; 2]>,
    #[serde(default)]
    pub center: bool,
    #[serde(default = "default_repetitions")]
    pub repetitions: usize,
    #[serde(default)]
    pub vary: Vary,
    #[serde(default)]
    pub parallel_repetitions: bool,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

impl Default for Options {
    fn default() -> Self {
        Self {
            clamp: None,
            center: false,
            repetitions: 1,
            vary: Vary::Seed,
            parallel_repetitions: false,
            output_dir: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureFormatSpec {
    #[default]
    Dense,
    Sparse,
}

impl From<FeatureFormatSpec> for FeatureFormat {
    fn from(f: FeatureFormatSpec) -> Self {
        match f {
            FeatureFormatSpec::Dense => FeatureFormat::DenseCsv,
            FeatureFormatSpec::Sparse => FeatureFormat::SparseTriplet,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverSpec {
    #[default]
    Auto,
    Direct,
    Cg,
}

impl From<SolverSpec> for Solver {
    fn from(s: SolverSpec) -> Self {
        match s {
            SolverSpec::Auto => Solver::Auto,
            SolverSpec::Direct => Solver::Direct,
            SolverSpec::Cg => Solver::Cg,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EntitySpec {
    pub name: String,
    pub count: usize,
    #[serde(default)]
    pub features: Option<PathBuf>,
    #[serde(default)]
    pub feature_format: FeatureFormatSpec,
    #[serde(default)]
    pub solver: SolverSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RelationSpec {
    pub name: String,
    pub entities: Vec<String>,
    pub observations: PathBuf,
    pub alpha: f64,
    #[serde(default)]
    pub test: Option<PathBuf>,
    #[serde(default)]
    pub holdout: Option<f64>,
    /// Per-observation features, row-aligned with `observations`.
    #[serde(default)]
    pub features: Option<PathBuf>,
    /// Per-cell features of the `test` file, required with `features`.
    #[serde(default)]
    pub test_features: Option<PathBuf>,
    #[serde(default)]
    pub feature_format: FeatureFormatSpec,
    #[serde(default)]
    pub solver: SolverSpec,
}

impl RelationSpec {
    pub fn has_test(&self) -> bool {
        self.test.is_some() || self.holdout.is_some()
    }
}

impl RunConfig {
    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn output_dir(&self) -> PathBuf {
        self.resolve(
            self.options
                .output_dir
                .as_deref()
                .unwrap_or(Path::new("output")),
        )
    }

    fn check(&self) -> Result<()> {
        let err = |m: String| Err(CliError::Config(m));
        let s = &self.sampler;
        if s.latent_dim == 0 {
            return err("sampler.latent_dim must be at least 1".into());
        }
        if s.burnin >= s.total {
            return err(format!(
                "sampler.burnin ({}) must be smaller than sampler.total ({})",
                s.burnin, s.total
            ));
        }
        if !(s.cg_tol > 0.0) {
            return err(format!("sampler.cg_tol must be positive, got {}", s.cg_tol));
        }
        if s.cg_maxiter == Some(0) {
            return err("sampler.cg_maxiter must be at least 1".into());
        }
        let o = &self.options;
        if o.repetitions == 0 {
            return err("options.repetitions must be at least 1".into());
        }
        if let Some([lo, hi]) = o.clamp {
            if !(lo <= hi) {
                return err(format!(
                    "options.clamp: lower bound {lo} exceeds upper bound {hi}"
                ));
            }
        }
        let mut names = HashSet::new();
        for (k, e) in self.entities.iter().enumerate() {
            if !names.insert(e.name.as_str()) {
                return err(format!("entity[{k}].name: duplicate entity `{}`", e.name));
            }
        }
        let mut rel_names = HashSet::new();
        for (k, r) in self.relations.iter().enumerate() {
            if !rel_names.insert(r.name.as_str()) {
                return err(format!(
                    "relation[{k}].name: duplicate relation `{}`",
                    r.name
                ));
            }
            if !(r.alpha > 0.0 && r.alpha.is_finite()) {
                return err(format!(
                    "relation[{k}].alpha must be positive, got {}",
                    r.alpha
                ));
            }
            for (m, e) in r.entities.iter().enumerate() {
                if !names.contains(e.as_str()) {
                    return err(format!("relation[{k}].entities[{m}]: unknown entity `{e}`"));
                }
            }
            match (&r.test, r.holdout) {
                (Some(_), Some(_)) => {
                    return err(format!(
                        "relation[{k}]: `test` and `holdout` are mutually exclusive"
                    ))
                }
                (_, Some(f)) if !(f > 0.0 && f < 1.0) => {
                    return err(format!("relation[{k}].holdout must lie in (0, 1), got {f}"))
                }
                _ => {}
            }
            if r.features.is_some() && r.test.is_some() && r.test_features.is_none() {
                return err(format!(
                    "relation[{k}].test_features is required when a featured relation has a test file"
                ));
            }
            if r.test_features.is_some() && (r.features.is_none() || r.test.is_none()) {
                return err(format!(
                    "relation[{k}].test_features needs both `features` and `test`"
                ));
            }
        }
        if self.relations.is_empty() {
            return err("at least one [[relation]] is required".into());
        }
        Ok(())
    }
}

/// Parses and validates a config from text; relative paths resolve against `base_dir`.
pub fn parse_config_str(text: &str, base_dir: &Path) -> Result<RunConfig> {
    let de = toml::Deserializer::parse(text).map_err(|e| CliError::Config(e.to_string()))?;
    let mut config: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        CliError::Config(format!("{path}: {}", e.into_inner().message()))
    })?;
    config.base_dir = base_dir.to_path_buf();
    config.check()?;
    Ok(config)
}

pub fn parse_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    parse_config_str(&text, &base)
}
