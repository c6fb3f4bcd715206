//! Preliminary integration: aligned units become consensus or parallel
//! units, unmatched units are kept as single-source variants.

use std::collections::{BTreeMap, HashMap, HashSet};

use super::align::{units_by_name, AlignmentEdge, UnitRef};
use super::segment::SegmentedOutput;
use super::similarity::EdgeClass;
use crate::domain::{unit_id, Block, FusionDocument, ModelId, Recommendation, TaskLabel, Unit, Variant, OTHER_BLOCK};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum IntegrateError {
    #[error("edge endpoint {0:?} does not exist")]
    UnknownUnit(UnitRef),
    #[error("edge joins two units of model {0}")]
    SameModel(ModelId),
    #[error("edge joins blocks {0:?} and {1:?}")]
    CrossBlock(String, String),
    #[error("unit {0:?} has more than one edge towards model {1}")]
    DuplicateEndpoint(UnitRef, ModelId),
}

/// Disjoint sets over unit indices, each set tracking the models it holds.
struct Groups {
    parent: Vec<usize>,
    models: Vec<HashSet<usize>>,
}

impl Groups {
    fn new(owners: &[usize]) -> Self {
        Self {
            parent: (0..owners.len()).collect(),
            models: owners.iter().map(|m| HashSet::from([*m])).collect(),
        }
    }

    fn find(&mut self, x: usize) -> usize {
        let mut root = x;
        while self.parent[root] != root {
            root = self.parent[root];
        }
        let mut cur = x;
        while self.parent[cur] != root {
            let next = self.parent[cur];
            self.parent[cur] = root;
            cur = next;
        }
        root
    }

    /// Joins the sets of `a` and `b` if they share no model.
    fn union_disjoint(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb || !self.models[ra].is_disjoint(&self.models[rb]) {
            return false;
        }
        let (keep, gone) = if ra < rb { (ra, rb) } else { (rb, ra) };
        let moved = std::mem::take(&mut self.models[gone]);
        self.models[keep].extend(moved);
        self.parent[gone] = keep;
        true
    }
}

/// Orders `models` by `rank`; models missing from `rank` go last, by id.
pub fn rank_positions(models: &[ModelId], rank: &[ModelId]) -> HashMap<ModelId, usize> {
    let mut rest: Vec<&ModelId> = models.iter().filter(|m| !rank.contains(m)).collect();
    rest.sort();
    rank.iter()
        .filter(|m| models.contains(m))
        .chain(rest)
        .enumerate()
        .map(|(i, m)| (m.clone(), i))
        .collect()
}

/// Builds the preliminary document.
///
/// Merge edges are applied by descending similarity and join two chains only
/// when they share no model; parallel edges then group chains into units the
/// same way. Edges that would put two units of one model into the same chain
/// or unit are skipped.
pub fn integrate(
    segmented: &[SegmentedOutput],
    edges: &[AlignmentEdge],
    task: TaskLabel,
    template: &[String],
    rank: &[ModelId],
) -> Result<FusionDocument, IntegrateError> {
    let models: Vec<ModelId> = segmented.iter().map(|s| s.model.clone()).collect();
    let pos = rank_positions(&models, rank);
    let mut order: Vec<usize> = (0..segmented.len()).collect();
    order.sort_by_key(|&i| pos[&segmented[i].model]);

    // flat unit table
    let mut index: HashMap<UnitRef, usize> = HashMap::new();
    let mut owner = Vec::new();
    let mut names = Vec::new();
    let mut texts = Vec::new();
    for (m, seg) in segmented.iter().enumerate() {
        for (b, block) in seg.blocks.iter().enumerate() {
            for (u, text) in block.units.iter().enumerate() {
                index.insert(UnitRef { model: seg.model.clone(), block: b, unit: u }, owner.len());
                owner.push(m);
                names.push(block.name.as_str());
                texts.push(text.as_str());
            }
        }
    }

    let mut checked: Vec<(&AlignmentEdge, usize, usize)> = Vec::new();
    let mut seen: HashSet<(usize, usize)> = HashSet::new();
    for e in edges {
        let l = *index.get(&e.left).ok_or_else(|| IntegrateError::UnknownUnit(e.left.clone()))?;
        let r = *index.get(&e.right).ok_or_else(|| IntegrateError::UnknownUnit(e.right.clone()))?;
        if owner[l] == owner[r] {
            return Err(IntegrateError::SameModel(e.left.model.clone()));
        }
        if names[l] != names[r] {
            return Err(IntegrateError::CrossBlock(names[l].into(), names[r].into()));
        }
        if !seen.insert((l, owner[r])) {
            return Err(IntegrateError::DuplicateEndpoint(e.left.clone(), e.right.model.clone()));
        }
        if !seen.insert((r, owner[l])) {
            return Err(IntegrateError::DuplicateEndpoint(e.right.clone(), e.left.model.clone()));
        }
        checked.push((e, l, r));
    }
    checked.sort_by(|a, b| {
        b.0.similarity
            .total_cmp(&a.0.similarity)
            .then_with(|| (&a.0.left, &a.0.right).cmp(&(&b.0.left, &b.0.right)))
    });

    let mut chains = Groups::new(&owner);
    for (e, l, r) in &checked {
        if e.class == EdgeClass::Merge {
            chains.union_disjoint(*l, *r);
        }
    }
    let mut units = Groups::new(&owner);
    for i in 0..owner.len() {
        let root = chains.find(i);
        units.union_disjoint(i, root);
    }
    for (e, l, r) in &checked {
        if e.class == EdgeClass::Parallel {
            units.union_disjoint(*l, *r);
        }
    }

    // placement of unit groups inside each block name, model by model
    let grouped: Vec<_> = segmented.iter().map(units_by_name).collect();
    let mut block_names: Vec<&str> = template.iter().map(String::as_str).collect();
    if !block_names.contains(&OTHER_BLOCK) {
        block_names.push(OTHER_BLOCK);
    }
    let mut extra: Vec<&str> = names.iter().copied().filter(|n| !block_names.contains(n)).collect();
    extra.sort();
    extra.dedup();
    block_names.extend(extra);

    let mut blocks = Vec::new();
    for name in block_names {
        let mut placed: Vec<usize> = Vec::new();
        for &m in &order {
            let Some(list) = grouped[m].get(name) else { continue };
            let roots: Vec<usize> = list
                .iter()
                .map(|(b, u, _)| {
                    let r = UnitRef { model: segmented[m].model.clone(), block: *b, unit: *u };
                    units.find(index[&r])
                })
                .collect();
            let mut cursor = roots
                .iter()
                .find_map(|g| placed.iter().position(|p| p == g))
                .unwrap_or(placed.len());
            for g in roots {
                match placed.iter().position(|p| *p == g) {
                    Some(at) => cursor = at + 1,
                    None => {
                        placed.insert(cursor, g);
                        cursor += 1;
                    }
                }
            }
        }
        if placed.is_empty() {
            continue;
        }
        let b = blocks.len();
        let units_out = placed
            .iter()
            .enumerate()
            .map(|(u, &group)| {
                let mut by_chain: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
                for i in (0..owner.len()).filter(|&i| units.find(i) == group) {
                    by_chain.entry(chains.find(i)).or_default().push(i);
                }
                let mut variants: Vec<(usize, Variant)> = by_chain
                    .into_values()
                    .map(|mut members| {
                        members.sort_by_key(|&i| pos[&segmented[owner[i]].model]);
                        let lead = pos[&segmented[owner[members[0]]].model];
                        let variant = Variant {
                            sources: members.iter().map(|&i| segmented[owner[i]].model.clone()).collect(),
                            content: texts[members[0]].to_string(),
                        };
                        (lead, variant)
                    })
                    .collect();
                variants.sort_by_key(|(lead, _)| *lead);
                Unit::new(unit_id(b, u), variants.into_iter().map(|(_, v)| v).collect())
            })
            .collect();
        blocks.push(Block { name: name.to_string(), units: units_out });
    }

    let mut participants = models;
    participants.sort_by_key(|m| pos[m]);
    Ok(FusionDocument {
        task,
        recommendation: Recommendation::Fusion,
        reason: String::new(),
        participants,
        blocks,
    })
}
