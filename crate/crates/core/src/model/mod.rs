//! Entities, relations and the hypergraph model that ties them together.

mod io;
mod validate;

pub use io::{detect_degree, load_features, load_observations, save_observations, FeatureFormat};
pub use validate::{Finding, ValidationReport};

use std::collections::HashSet;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::features::FeatureMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EntityId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RelationId(pub usize);

/// One observed cell. Indices are 0-based; files use 1-based indices.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub index: Vec<usize>,
    pub value: f64,
}

impl Observation {
    pub fn new(index: Vec<usize>, value: f64) -> Self {
        Self { index, value }
    }
}

#[derive(Debug, Clone)]
pub struct Entity {
    name: String,
    count: usize,
    features: Option<FeatureMatrix>,
}

impl Entity {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn features(&self) -> Option<&FeatureMatrix> {
        self.features.as_ref()
    }

    /// Feature dimension, 0 without features.
    pub fn num_features(&self) -> usize {
        self.features.as_ref().map_or(0, FeatureMatrix::ncols)
    }
}

/// A partially observed k-way array over an ordered list of entities.
#[derive(Debug, Clone)]
pub struct Relation {
    name: String,
    entities: Vec<EntityId>,
    cells: Vec<usize>,
    values: Vec<f64>,
    alpha: f64,
    features: Option<FeatureMatrix>,
}

impl Relation {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn entities(&self) -> &[EntityId] {
        &self.entities
    }

    pub fn degree(&self) -> usize {
        self.entities.len()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// 0-based index vector of observation `j`.
    pub fn cell(&self, j: usize) -> &[usize] {
        let k = self.degree();
        &self.cells[j * k..(j + 1) * k]
    }

    pub fn value(&self, j: usize) -> f64 {
        self.values[j]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Per-observation features, row-aligned with the observations.
    pub fn features(&self) -> Option<&FeatureMatrix> {
        self.features.as_ref()
    }

    pub fn num_features(&self) -> usize {
        self.features.as_ref().map_or(0, FeatureMatrix::ncols)
    }

    pub fn observations(&self) -> impl Iterator<Item = Observation> + '_ {
        (0..self.len()).map(move |j| Observation::new(self.cell(j).to_vec(), self.values[j]))
    }

    /// Mode positions at which `e` appears.
    pub fn modes_of(&self, e: EntityId) -> impl Iterator<Item = usize> + '_ {
        self.entities
            .iter()
            .enumerate()
            .filter(move |(_, &x)| x == e)
            .map(|(m, _)| m)
    }
}

/// Hyperparameters shared by every entity: the Normal-Wishart prior on the
/// latent prior `(μ_e, Λ_e)` and the gamma hyperprior on feature-weight
/// precisions.
#[derive(Debug, Clone, PartialEq)]
pub struct HyperParams {
    pub latent_dim: usize,
    pub mu0: DVector<f64>,
    pub beta0: f64,
    pub w0: DMatrix<f64>,
    pub nu0: f64,
    pub gamma_mu: f64,
    pub gamma_nu: f64,
}

impl HyperParams {
    /// Uninformative defaults: `μ0 = 0`, `β0 = 2`, `W0 = I`, `ν0 = D`, `μ = ν = 1`.
    pub fn new(latent_dim: usize) -> Self {
        Self {
            latent_dim,
            mu0: DVector::zeros(latent_dim),
            beta0: 2.0,
            w0: DMatrix::identity(latent_dim, latent_dim),
            nu0: latent_dim as f64,
            gamma_mu: 1.0,
            gamma_nu: 1.0,
        }
    }

    pub fn check(&self) -> Result<()> {
        let d = self.latent_dim;
        if d == 0 {
            return Err(Error::InvalidParameter(
                "latent dimension must be positive".into(),
            ));
        }
        if self.mu0.len() != d || self.w0.nrows() != d || self.w0.ncols() != d {
            return Err(Error::Dimension(format!(
                "hyperparameters must have dimension {d} (mu0 has {}, W0 is {}x{})",
                self.mu0.len(),
                self.w0.nrows(),
                self.w0.ncols()
            )));
        }
        if !(self.beta0 > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "beta0 must be positive, got {}",
                self.beta0
            )));
        }
        if !(self.nu0 >= d as f64) {
            return Err(Error::InvalidParameter(format!(
                "nu0 must be at least the latent dimension {d}, got {}",
                self.nu0
            )));
        }
        if !(self.gamma_mu > 0.0 && self.gamma_nu > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "gamma hyperprior parameters must be positive, got mu={}, nu={}",
                self.gamma_mu, self.gamma_nu
            )));
        }
        crate::numerics::cholesky_psd(&self.w0)?;
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct Model {
    entities: Vec<Entity>,
    relations: Vec<Relation>,
    hyper: HyperParams,
}

impl Model {
    pub fn new(hyper: HyperParams) -> Self {
        Self {
            entities: Vec::new(),
            relations: Vec::new(),
            hyper,
        }
    }

    pub fn hyper(&self) -> &HyperParams {
        &self.hyper
    }

    pub fn hyper_mut(&mut self) -> &mut HyperParams {
        &mut self.hyper
    }

    pub fn latent_dim(&self) -> usize {
        self.hyper.latent_dim
    }

    pub fn entities(&self) -> &[Entity] {
        &self.entities
    }

    pub fn relations(&self) -> &[Relation] {
        &self.relations
    }

    pub fn entity(&self, id: EntityId) -> &Entity {
        &self.entities[id.0]
    }

    pub fn relation(&self, id: RelationId) -> &Relation {
        &self.relations[id.0]
    }

    pub fn entity_id(&self, name: &str) -> Option<EntityId> {
        self.entities
            .iter()
            .position(|e| e.name == name)
            .map(EntityId)
    }

    pub fn relation_id(&self, name: &str) -> Option<RelationId> {
        self.relations
            .iter()
            .position(|r| r.name == name)
            .map(RelationId)
    }

    pub fn add_entity(
        &mut self,
        name: &str,
        count: usize,
        features: Option<FeatureMatrix>,
    ) -> Result<EntityId> {
        if self.entity_id(name).is_some() {
            return Err(Error::DuplicateEntity(name.to_string()));
        }
        if count == 0 {
            return Err(Error::EmptyEntity(name.to_string()));
        }
        if let Some(f) = &features {
            if f.nrows() != count {
                return Err(Error::FeatureRows {
                    what: format!("entity `{name}`"),
                    rows: f.nrows(),
                    expected: count,
                });
            }
        }
        self.entities.push(Entity {
            name: name.to_string(),
            count,
            features,
        });
        Ok(EntityId(self.entities.len() - 1))
    }

    /// Registers a relation over the named entities (in index-vector order).
    pub fn add_relation(
        &mut self,
        name: &str,
        entity_names: &[&str],
        observations: Vec<Observation>,
        alpha: f64,
        features: Option<FeatureMatrix>,
    ) -> Result<RelationId> {
        if self.relation_id(name).is_some() {
            return Err(Error::DuplicateRelation(name.to_string()));
        }
        if entity_names.len() < 2 {
            return Err(Error::RelationDegree(name.to_string()));
        }
        let entities = entity_names
            .iter()
            .map(|n| {
                self.entity_id(n)
                    .ok_or_else(|| Error::UnknownEntity(n.to_string()))
            })
            .collect::<Result<Vec<_>>>()?;
        if !(alpha > 0.0) || !alpha.is_finite() {
            return Err(Error::NonPositiveAlpha {
                relation: name.to_string(),
                alpha,
            });
        }
        let k = entities.len();

        // pairs of modes that share an entity; a cell with equal indices there
        // puts the same latent vector into its product twice
        let repeated_modes: Vec<(usize, usize)> = (0..k)
            .flat_map(|a| ((a + 1)..k).map(move |b| (a, b)))
            .filter(|&(a, b)| entities[a] == entities[b])
            .collect();

        let mut cells = Vec::with_capacity(observations.len() * k);
        let mut values = Vec::with_capacity(observations.len());
        for (pos, obs) in observations.iter().enumerate() {
            if obs.index.len() != k {
                return Err(Error::IndexArity {
                    relation: name.to_string(),
                    position: pos,
                    got: obs.index.len(),
                    expected: k,
                });
            }
            for (mode, (&ix, &e)) in obs.index.iter().zip(&entities).enumerate() {
                let count = self.entities[e.0].count;
                if ix >= count {
                    return Err(Error::IndexOutOfRange {
                        relation: name.to_string(),
                        entity: self.entities[e.0].name.clone(),
                        mode,
                        index: ix,
                        count,
                    });
                }
            }
            if repeated_modes
                .iter()
                .any(|&(a, b)| obs.index[a] == obs.index[b])
            {
                return Err(Error::DiagonalObservation {
                    relation: name.to_string(),
                    cell: obs.index.clone(),
                });
            }
            cells.extend_from_slice(&obs.index);
            values.push(obs.value);
        }

        let mut seen = HashSet::with_capacity(values.len());
        for j in 0..values.len() {
            let cell = &cells[j * k..(j + 1) * k];
            if !seen.insert(cell) {
                return Err(Error::DuplicateCell {
                    relation: name.to_string(),
                    cell: cell.to_vec(),
                });
            }
        }

        if let Some(f) = &features {
            if f.nrows() != values.len() {
                return Err(Error::FeatureRows {
                    what: format!("relation `{name}`"),
                    rows: f.nrows(),
                    expected: values.len(),
                });
            }
            if f.ncols() == 0 {
                return Err(Error::InvalidParameter(format!(
                    "relation `{name}`: feature matrix has no columns"
                )));
            }
        }

        self.relations.push(Relation {
            name: name.to_string(),
            entities,
            cells,
            values,
            alpha,
            features,
        });
        Ok(RelationId(self.relations.len() - 1))
    }

    pub fn validate(&self) -> ValidationReport {
        validate::validate_model(self)
    }

    /// Relations that link entity `e`.
    pub fn relations_of(&self, e: EntityId) -> impl Iterator<Item = RelationId> + '_ {
        self.relations
            .iter()
            .enumerate()
            .filter(move |(_, r)| r.entities.contains(&e))
            .map(|(i, _)| RelationId(i))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> Model {
        let mut m = Model::new(HyperParams::new(2));
        m.add_entity("drug", 3, None).unwrap();
        m.add_entity("protein", 4, None).unwrap();
        m
    }

    #[test]
    fn entity_without_features() {
        let m = base();
        let e = m.entity(m.entity_id("drug").unwrap());
        assert_eq!(e.count(), 3);
        assert_eq!(e.num_features(), 0);
    }

    #[test]
    fn entity_feature_shapes() {
        let mut m = Model::new(HyperParams::new(2));
        let id = m
            .add_entity("drug", 3, Some(FeatureMatrix::Dense(DMatrix::zeros(3, 4))))
            .unwrap();
        assert_eq!(m.entity(id).num_features(), 4);
        let err = m
            .add_entity(
                "target",
                3,
                Some(FeatureMatrix::Dense(DMatrix::zeros(2, 4))),
            )
            .unwrap_err();
        assert!(matches!(
            err,
            Error::FeatureRows {
                rows: 2,
                expected: 3,
                ..
            }
        ));
        assert!(matches!(
            m.add_entity("drug", 1, None),
            Err(Error::DuplicateEntity(_))
        ));
    }

    #[test]
    fn matrix_and_tensor_relations() {
        let mut m = base();
        m.add_entity("type", 2, None).unwrap();
        let r = m
            .add_relation(
                "IC50",
                &["drug", "protein"],
                vec![Observation::new(vec![0, 1], 5.1)],
                5.0,
                None,
            )
            .unwrap();
        assert_eq!(m.relation(r).degree(), 2);
        let t = m
            .add_relation(
                "IC50Ki",
                &["drug", "protein", "type"],
                vec![
                    Observation::new(vec![0, 1, 0], 5.1),
                    Observation::new(vec![0, 1, 1], 4.2),
                ],
                5.0,
                None,
            )
            .unwrap();
        assert_eq!(m.relation(t).degree(), 3);
        assert_eq!(m.relation(t).cell(1), &[0, 1, 1]);
    }

    #[test]
    fn relation_errors() {
        let mut m = base();
        let obs = |i: usize, j: usize| vec![Observation::new(vec![i, j], 1.0)];
        assert!(matches!(
            m.add_relation("R", &["drug", "gene"], obs(0, 0), 1.0, None),
            Err(Error::UnknownEntity(_))
        ));
        assert!(matches!(
            m.add_relation("R", &["drug", "protein"], obs(3, 0), 1.0, None),
            Err(Error::IndexOutOfRange { .. })
        ));
        assert!(matches!(
            m.add_relation("R", &["drug", "protein"], obs(0, 0), 0.0, None),
            Err(Error::NonPositiveAlpha { .. })
        ));
        let dup = vec![
            Observation::new(vec![1, 2], 1.0),
            Observation::new(vec![1, 2], 2.0),
        ];
        assert!(matches!(
            m.add_relation("R", &["drug", "protein"], dup, 1.0, None),
            Err(Error::DuplicateCell { .. })
        ));
        assert!(matches!(
            m.add_relation(
                "R",
                &["drug", "drug"],
                vec![Observation::new(vec![0, 0], 2.0)],
                1.0,
                None
            ),
            Err(Error::DiagonalObservation { .. })
        ));
        assert!(matches!(
            m.add_relation("R", &["drug"], vec![], 1.0, None),
            Err(Error::RelationDegree(_))
        ));
        let feats = FeatureMatrix::Dense(DMatrix::zeros(2, 1));
        assert!(matches!(
            m.add_relation("R", &["drug", "protein"], obs(0, 0), 1.0, Some(feats)),
            Err(Error::FeatureRows { .. })
        ));
    }

    #[test]
    fn default_hyperparameters() {
        let h = HyperParams::new(3);
        assert_eq!(h.beta0, 2.0);
        assert_eq!(h.nu0, 3.0);
        assert_eq!(h.w0, DMatrix::identity(3, 3));
        assert_eq!(h.mu0, DVector::zeros(3));
        assert_eq!((h.gamma_mu, h.gamma_nu), (1.0, 1.0));
        assert!(h.check().is_ok());
    }
}
