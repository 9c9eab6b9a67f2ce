//! Posterior-predictive aggregation and evaluation.

use std::io::Write;

use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::gibbs::{SampleSink, SamplerState};
use crate::model::{Model, RelationId};

/// Cells of one relation to predict, with optional ground truth and
/// per-cell relation features (row-aligned with `cells`).
#[derive(Debug, Clone)]
pub struct PredictionQuery {
    pub relation: RelationId,
    pub cells: Vec<Vec<usize>>,
    pub truth: Option<Vec<f64>>,
    pub features: Option<FeatureMatrix>,
}

impl PredictionQuery {
    pub fn new(
        model: &Model,
        relation: RelationId,
        cells: Vec<Vec<usize>>,
        truth: Option<Vec<f64>>,
        features: Option<FeatureMatrix>,
    ) -> Result<Self> {
        let rel = model.relation(relation);
        for cell in &cells {
            check_cell(model, relation, cell)?;
        }
        if let Some(t) = &truth {
            if t.len() != cells.len() {
                return Err(Error::Dimension(format!(
                    "{} truth values for {} cells",
                    t.len(),
                    cells.len()
                )));
            }
        }
        match (&features, rel.num_features()) {
            (Some(f), nf) if f.nrows() != cells.len() || f.ncols() != nf => {
                return Err(Error::Dimension(format!(
                    "query features are {}x{}, expected {}x{nf}",
                    f.nrows(),
                    f.ncols(),
                    cells.len()
                )))
            }
            (None, nf) if nf > 0 => {
                return Err(Error::InvalidParameter(format!(
                    "relation `{}` has features; the query must supply them",
                    rel.name()
                )))
            }
            _ => {}
        }
        Ok(Self {
            relation,
            cells,
            truth,
            features,
        })
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }
}

fn check_cell(model: &Model, relation: RelationId, cell: &[usize]) -> Result<()> {
    let rel = model.relation(relation);
    if cell.len() != rel.degree() {
        return Err(Error::IndexArity {
            relation: rel.name().to_string(),
            position: 0,
            got: cell.len(),
            expected: rel.degree(),
        });
    }
    for (mode, (&ix, e)) in cell.iter().zip(rel.entities()).enumerate() {
        let ent = model.entity(*e);
        if ix >= ent.count() {
            return Err(Error::IndexOutOfRange {
                relation: rel.name().to_string(),
                entity: ent.name().to_string(),
                mode,
                index: ix,
                count: ent.count(),
            });
        }
    }
    Ok(())
}

/// `1ᵀ(u_{j1} ∘ … ∘ u_{jk}) + β_Rᵀ x_j`; the feature term needs the cell's
/// feature row when the relation has features.
pub fn predict_point(
    model: &Model,
    state: &SamplerState,
    relation: RelationId,
    cell: &[usize],
    features: Option<(&FeatureMatrix, usize)>,
) -> Result<f64> {
    check_cell(model, relation, cell)?;
    let rel = model.relation(relation);
    let mut value = state.latent_product_sum(rel, cell);
    if let Some(beta) = &state.relations[relation.0].beta {
        let (x, row) = features.ok_or_else(|| {
            Error::InvalidParameter(format!(
                "relation `{}` needs the cell's features",
                rel.name()
            ))
        })?;
        value += x.row_dot(row, beta);
    }
    Ok(value)
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Moments {
    n: usize,
    mean: f64,
    m2: f64,
    min: f64,
    max: f64,
}

impl Default for Moments {
    fn default() -> Self {
        Self {
            n: 0,
            mean: 0.0,
            m2: 0.0,
            min: f64::INFINITY,
            max: f64::NEG_INFINITY,
        }
    }
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.n += 1;
        let delta = x - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (x - self.mean);
        self.min = self.min.min(x);
        self.max = self.max.max(x);
    }

    fn merge(&mut self, other: &Moments) {
        if other.n == 0 {
            return;
        }
        if self.n == 0 {
            *self = *other;
            return;
        }
        let n = self.n + other.n;
        let delta = other.mean - self.mean;
        self.mean += delta * other.n as f64 / n as f64;
        self.m2 += other.m2 + delta * delta * (self.n as f64 * other.n as f64) / n as f64;
        self.n = n;
        self.min = self.min.min(other.min);
        self.max = self.max.max(other.max);
    }
}

/// Running per-cell posterior-predictive mean and variance (Welford).
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionAccumulator {
    cells: Vec<Moments>,
}

impl PredictionAccumulator {
    pub fn new(len: usize) -> Self {
        Self {
            cells: vec![Moments::default(); len],
        }
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    /// Samples consumed so far.
    pub fn count(&self) -> usize {
        self.cells.first().map_or(0, |m| m.n)
    }

    /// Adds one sample's predictions for every cell of `query`.
    pub fn accumulate(
        &mut self,
        model: &Model,
        state: &SamplerState,
        query: &PredictionQuery,
    ) -> Result<()> {
        if query.len() != self.len() {
            return Err(Error::Dimension(format!(
                "accumulator has {} cells, query has {}",
                self.len(),
                query.len()
            )));
        }
        let values = query
            .cells
            .iter()
            .enumerate()
            .map(|(k, cell)| {
                let feats = query.features.as_ref().map(|f| (f, k));
                predict_point(model, state, query.relation, cell, feats)
            })
            .collect::<Result<Vec<_>>>()?;
        self.push(&values)
    }

    /// Adds one value per cell.
    pub fn push(&mut self, values: &[f64]) -> Result<()> {
        if values.len() != self.len() {
            return Err(Error::Dimension(format!(
                "accumulator has {} cells, got {} values",
                self.len(),
                values.len()
            )));
        }
        for (m, &v) in self.cells.iter_mut().zip(values) {
            m.push(v);
        }
        Ok(())
    }

    /// Pairwise merge of two accumulators over the same cells.
    pub fn merge(&mut self, other: &PredictionAccumulator) -> Result<()> {
        if other.len() != self.len() {
            return Err(Error::Dimension(
                "merging accumulators of different length".into(),
            ));
        }
        for (a, b) in self.cells.iter_mut().zip(&other.cells) {
            a.merge(b);
        }
        Ok(())
    }

    pub fn means(&self) -> Vec<f64> {
        self.cells.iter().map(|m| m.mean).collect()
    }

    /// Sample variances; `None` until two samples have been seen.
    pub fn variances(&self) -> Vec<Option<f64>> {
        self.cells
            .iter()
            .map(|m| (m.n >= 2).then(|| m.m2 / (m.n - 1) as f64))
            .collect()
    }

    pub fn stds(&self) -> Vec<Option<f64>> {
        self.variances()
            .into_iter()
            .map(|v| v.map(f64::sqrt))
            .collect()
    }

    pub fn min_max(&self) -> Vec<(f64, f64)> {
        self.cells.iter().map(|m| (m.min, m.max)).collect()
    }
}

/// A query together with its accumulator, usable as a sampler sink.
#[derive(Debug, Clone)]
pub struct QueryAccumulator {
    pub query: PredictionQuery,
    pub acc: PredictionAccumulator,
}

impl QueryAccumulator {
    pub fn new(query: PredictionQuery) -> Self {
        let acc = PredictionAccumulator::new(query.len());
        Self { query, acc }
    }
}

impl SampleSink for QueryAccumulator {
    fn consume(&mut self, model: &Model, state: &SamplerState) -> Result<()> {
        self.acc.accumulate(model, state, &self.query)
    }
}

pub fn rmse(predicted: &[f64], truth: &[f64]) -> Result<f64> {
    if predicted.is_empty() {
        return Err(Error::InvalidParameter("rmse of an empty list".into()));
    }
    if predicted.len() != truth.len() {
        return Err(Error::Dimension(format!(
            "{} predictions for {} truth values",
            predicted.len(),
            truth.len()
        )));
    }
    let sse: f64 = predicted
        .iter()
        .zip(truth)
        .map(|(p, t)| (p - t).powi(2))
        .sum();
    Ok((sse / predicted.len() as f64).sqrt())
}

/// Normal-approximation interval `mean ± z·std` per cell.
pub fn credibility_interval(acc: &PredictionAccumulator, level: f64) -> Result<Vec<(f64, f64)>> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "level must be in (0, 1), got {level}"
        )));
    }
    if acc.count() < 2 {
        return Err(Error::InvalidParameter(format!(
            "intervals need at least two samples, have {}",
            acc.count()
        )));
    }
    let z = Normal::standard().inverse_cdf(0.5 + level / 2.0);
    Ok(acc
        .means()
        .into_iter()
        .zip(acc.stds())
        .map(|(m, s)| {
            let half = z * s.unwrap_or(0.0);
            (m - half, m + half)
        })
        .collect())
}

pub fn clamp_predictions(values: &[f64], low: f64, high: f64) -> Result<Vec<f64>> {
    if !(low <= high) {
        return Err(Error::InvalidParameter(format!(
            "clamp range [{low}, {high}] is empty"
        )));
    }
    Ok(values.iter().map(|v| v.clamp(low, high)).collect())
}

/// Post-processing applied to posterior means before they are reported.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct OutputTransform {
    /// Added to every mean (undoes centering).
    pub offset: f64,
    pub clamp: Option<(f64, f64)>,
}

impl OutputTransform {
    pub fn apply(&self, means: &[f64]) -> Result<Vec<f64>> {
        let shifted: Vec<f64> = means.iter().map(|m| m + self.offset).collect();
        match self.clamp {
            Some((lo, hi)) => clamp_predictions(&shifted, lo, hi),
            None => Ok(shifted),
        }
    }
}

/// Writes `index_1..index_k,mean,std[,truth,error]` rows with 1-based indices.
pub fn write_predictions_csv<W: Write>(
    mut out: W,
    query: &PredictionQuery,
    acc: &PredictionAccumulator,
    transform: &OutputTransform,
) -> std::io::Result<()> {
    let degree = query.cells.first().map_or(0, Vec::len);
    let mut header: Vec<String> = (1..=degree).map(|m| format!("index_{m}")).collect();
    header.push("mean".into());
    header.push("std".into());
    if query.truth.is_some() {
        header.push("truth".into());
        header.push("error".into());
    }
    writeln!(out, "{}", header.join(","))?;

    let means = transform
        .apply(&acc.means())
        .map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidInput, e.to_string()))?;
    let stds = acc.stds();
    for (k, cell) in query.cells.iter().enumerate() {
        for ix in cell {
            write!(out, "{},", ix + 1)?;
        }
        write!(out, "{},{}", means[k], stds[k].unwrap_or(f64::NAN))?;
        if let Some(truth) = &query.truth {
            write!(out, ",{},{}", truth[k], means[k] - truth[k])?;
        }
        writeln!(out)?;
    }
    Ok(())
}
