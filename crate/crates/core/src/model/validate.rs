use std::collections::BTreeMap;

use super::{EntityId, Model};

/// A reason the model cannot be sampled as-is.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Finding {
    /// Model has no entities or no relations.
    Empty,
    /// Two entities linked by more than one relation. Every relation between
    /// them is predicted by the same latent product, so only identical data
    /// could be fitted.
    ParallelRelations {
        entities: (String, String),
        relations: Vec<String>,
    },
    /// The same entity appears in more than one mode of a relation.
    SelfRelation { relation: String, entity: String },
}

impl Finding {
    pub fn message(&self) -> String {
        match self {
            Finding::Empty => "model needs at least one entity and one relation".to_string(),
            Finding::ParallelRelations { entities, relations } => format!(
                "entities `{}` and `{}` are linked by {} relations ({}); the model is not \
                 factorizable because these relations share one latent product and can only \
                 fit identical data. Merge them into a single tensor relation over \
                 ({}, {}, type) with an added type entity whose instances name the original \
                 relations",
                entities.0,
                entities.1,
                relations.len(),
                relations.iter().map(|r| format!("`{r}`")).collect::<Vec<_>>().join(", "),
                entities.0,
                entities.1,
            ),
            Finding::SelfRelation { relation, entity } => format!(
                "relation `{relation}` links entity `{entity}` to itself; self-relations are not \
                 supported because the latent conditionals assume every entity appears once per cell"
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValidationReport {
    pub findings: Vec<Finding>,
}

impl ValidationReport {
    pub fn ok(&self) -> bool {
        self.findings.is_empty()
    }
}

pub(crate) fn validate_model(model: &Model) -> ValidationReport {
    let mut findings = Vec::new();
    if model.entities.is_empty() || model.relations.is_empty() {
        findings.push(Finding::Empty);
    }

    let mut pairs: BTreeMap<(EntityId, EntityId), Vec<usize>> = BTreeMap::new();
    for (r, rel) in model.relations.iter().enumerate() {
        let mut ents = rel.entities.clone();
        ents.sort();
        if let Some(w) = ents.windows(2).find(|w| w[0] == w[1]) {
            findings.push(Finding::SelfRelation {
                relation: rel.name.clone(),
                entity: model.entity(w[0]).name.clone(),
            });
        }
        ents.dedup();
        for a in 0..ents.len() {
            for b in (a + 1)..ents.len() {
                pairs.entry((ents[a], ents[b])).or_default().push(r);
            }
        }
    }
    for ((a, b), rels) in pairs {
        if rels.len() > 1 {
            let mut relations: Vec<String> = rels
                .iter()
                .map(|&r| model.relations[r].name.clone())
                .collect();
            relations.sort();
            findings.push(Finding::ParallelRelations {
                entities: (model.entity(a).name.clone(), model.entity(b).name.clone()),
                relations,
            });
        }
    }
    ValidationReport { findings }
}
