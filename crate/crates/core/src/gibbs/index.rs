use crate::model::{EntityId, Model};

/// Observation ids of one relation grouped by the index in one mode.
#[derive(Debug, Clone)]
pub(crate) struct ModeIndex {
    offsets: Vec<usize>,
    obs: Vec<usize>,
}

impl ModeIndex {
    fn build(indices: impl Iterator<Item = usize> + Clone, count: usize) -> Self {
        let mut offsets = vec![0usize; count + 1];
        for i in indices.clone() {
            offsets[i + 1] += 1;
        }
        for i in 0..count {
            offsets[i + 1] += offsets[i];
        }
        let mut next = offsets.clone();
        let mut obs = vec![0usize; offsets[count]];
        for (j, i) in indices.enumerate() {
            obs[next[i]] = j;
            next[i] += 1;
        }
        Self { offsets, obs }
    }

    pub(crate) fn observations(&self, i: usize) -> &[usize] {
        &self.obs[self.offsets[i]..self.offsets[i + 1]]
    }
}

/// Where each entity occurs: `(relation, mode)` pairs plus per-mode indices.
#[derive(Debug, Clone)]
pub(crate) struct ModelIndex {
    pub(crate) links: Vec<Vec<(usize, usize)>>,
    modes: Vec<Vec<ModeIndex>>,
}

impl ModelIndex {
    pub(crate) fn new(model: &Model) -> Self {
        let mut links = vec![Vec::new(); model.entities().len()];
        let mut modes = Vec::with_capacity(model.relations().len());
        for (r, rel) in model.relations().iter().enumerate() {
            let mut per_mode = Vec::with_capacity(rel.degree());
            for (m, &EntityId(e)) in rel.entities().iter().enumerate() {
                links[e].push((r, m));
                let count = model.entities()[e].count();
                per_mode.push(ModeIndex::build(
                    (0..rel.len()).map(|j| rel.cell(j)[m]),
                    count,
                ));
            }
            modes.push(per_mode);
        }
        Self { links, modes }
    }

    pub(crate) fn mode(&self, relation: usize, mode: usize) -> &ModeIndex {
        &self.modes[relation][mode]
    }
}
