//! Cross-model unit alignment.
//!
//! For every pair of models and every shared block name, candidate unit
//! pairs are taken greedily in descending similarity, each unit used at most
//! once per model pair. Edges below the alignment threshold are still
//! reported with class `none`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::segment::SegmentedOutput;
use super::similarity::{EdgeClass, Thresholds, TrigramVector};
use crate::domain::ModelId;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct UnitRef {
    pub model: ModelId,
    pub block: usize,
    pub unit: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignmentEdge {
    pub left: UnitRef,
    pub right: UnitRef,
    pub similarity: f64,
    pub class: EdgeClass,
}

/// Greedy matching over a similarity matrix: pairs taken by descending
/// similarity (ties by row, then column), each row and column once.
pub fn greedy_match(sim: &[Vec<f64>]) -> Vec<(usize, usize)> {
    let rows = sim.len();
    let cols = sim.first().map_or(0, Vec::len);
    let mut candidates: Vec<(usize, usize)> = (0..rows)
        .flat_map(|i| (0..cols).map(move |j| (i, j)))
        .collect();
    candidates.sort_by(|a, b| sim[b.0][b.1].total_cmp(&sim[a.0][a.1]).then(a.cmp(b)));
    let mut row_used = vec![false; rows];
    let mut col_used = vec![false; cols];
    let mut out = Vec::new();
    for (i, j) in candidates {
        if !row_used[i] && !col_used[j] {
            row_used[i] = true;
            col_used[j] = true;
            out.push((i, j));
        }
    }
    out
}

/// Units of one model grouped by block name, in document order.
pub(crate) fn units_by_name(seg: &SegmentedOutput) -> BTreeMap<&str, Vec<(usize, usize, &str)>> {
    let mut map: BTreeMap<&str, Vec<(usize, usize, &str)>> = BTreeMap::new();
    for (b, block) in seg.blocks.iter().enumerate() {
        for (u, text) in block.units.iter().enumerate() {
            map.entry(block.name.as_str()).or_default().push((b, u, text.as_str()));
        }
    }
    map
}

pub fn align_deterministic(segmented: &[SegmentedOutput], thresholds: Thresholds) -> Vec<AlignmentEdge> {
    let grouped: Vec<_> = segmented.iter().map(units_by_name).collect();
    let vectors: Vec<BTreeMap<&str, Vec<TrigramVector>>> = grouped
        .iter()
        .map(|g| {
            g.iter()
                .map(|(name, units)| (*name, units.iter().map(|(_, _, t)| TrigramVector::new(t)).collect()))
                .collect()
        })
        .collect();

    let mut edges = Vec::new();
    for l in 0..segmented.len() {
        for r in (l + 1)..segmented.len() {
            for (name, left_units) in &grouped[l] {
                let Some(right_units) = grouped[r].get(name) else {
                    continue;
                };
                let lv = &vectors[l][name];
                let rv = &vectors[r][name];
                let sim: Vec<Vec<f64>> = lv
                    .iter()
                    .map(|a| rv.iter().map(|b| a.cosine(b)).collect())
                    .collect();
                for (i, j) in greedy_match(&sim) {
                    let s = sim[i][j];
                    edges.push(AlignmentEdge {
                        left: UnitRef {
                            model: segmented[l].model.clone(),
                            block: left_units[i].0,
                            unit: left_units[i].1,
                        },
                        right: UnitRef {
                            model: segmented[r].model.clone(),
                            block: right_units[j].0,
                            unit: right_units[j].1,
                        },
                        similarity: s,
                        class: thresholds.classify(s),
                    });
                }
            }
        }
    }
    edges
}
