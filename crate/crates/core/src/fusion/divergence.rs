//! Divergence between model outputs and the fusion-vs-comparison decision.

use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use super::align::{AlignmentEdge, UnitRef};
use super::segment::SegmentedOutput;
use super::similarity::{token_len, EdgeClass};
use crate::domain::{DivergenceReport, Recommendation, TaskMajor};

/// Fraction of unit mass covered by aligned pairs.
///
/// For each model pair, aligned mass is the sum over non-`none` edges of the
/// shorter unit's token count, over the mean of the two models' total token
/// counts; pairs are pooled before dividing.
pub fn divergence_from_alignment(segmented: &[SegmentedOutput], edges: &[AlignmentEdge]) -> DivergenceReport {
    let lens: Vec<Vec<Vec<usize>>> = segmented
        .iter()
        .map(|s| s.blocks.iter().map(|b| b.units.iter().map(|u| token_len(u)).collect()).collect())
        .collect();
    let index_of = |r: &UnitRef| segmented.iter().position(|s| s.model == r.model);
    let len_of = |r: &UnitRef| -> usize {
        index_of(r)
            .and_then(|m| lens[m].get(r.block))
            .and_then(|b| b.get(r.unit))
            .copied()
            .unwrap_or(0)
    };
    let totals: Vec<usize> = lens.iter().map(|b| b.iter().flatten().sum()).collect();

    let mut aligned = 0usize;
    let mut denom2 = 0usize;
    let mut unmatched: BTreeMap<&str, usize> = BTreeMap::new();
    for l in 0..segmented.len() {
        for r in (l + 1)..segmented.len() {
            denom2 += totals[l] + totals[r];
            let mut matched: HashSet<&UnitRef> = HashSet::new();
            for e in edges.iter().filter(|e| e.class != EdgeClass::None) {
                let pair = (index_of(&e.left), index_of(&e.right));
                if pair == (Some(l), Some(r)) || pair == (Some(r), Some(l)) {
                    aligned += len_of(&e.left).min(len_of(&e.right));
                    matched.insert(&e.left);
                    matched.insert(&e.right);
                }
            }
            for m in [l, r] {
                for (b, block) in segmented[m].blocks.iter().enumerate() {
                    for (u, len) in lens[m][b].iter().enumerate() {
                        let key = UnitRef { model: segmented[m].model.clone(), block: b, unit: u };
                        if !matched.contains(&key) {
                            *unmatched.entry(block.name.as_str()).or_default() += len;
                        }
                    }
                }
            }
        }
    }
    // aligned / (denom2 / 2)
    let mass = if denom2 == 0 { 0.0 } else { 2.0 * aligned as f64 / denom2 as f64 };

    let mut dominant: Vec<(&str, usize)> = unmatched.into_iter().filter(|(_, n)| *n > 0).collect();
    dominant.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
    let rationale = if dominant.is_empty() {
        format!("{:.0}% of content aligned; no unmatched units", mass * 100.0)
    } else {
        let names: Vec<String> = dominant
            .iter()
            .take(3)
            .map(|(name, n)| format!("{name} ({n} tokens)"))
            .collect();
        format!(
            "{:.0}% of content aligned; most unmatched content in {}",
            mass * 100.0,
            names.join(", ")
        )
    };
    DivergenceReport::new(mass, rationale)
}

/// Divergence above which comparison view is recommended, per major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViewThresholds {
    pub content_generation: f64,
    pub content_editing: f64,
    pub default: f64,
}

impl Default for ViewThresholds {
    fn default() -> Self {
        Self {
            content_generation: 0.50,
            content_editing: 0.75,
            default: 0.65,
        }
    }
}

impl ViewThresholds {
    pub fn for_major(&self, major: TaskMajor) -> f64 {
        match major {
            TaskMajor::ContentGeneration => self.content_generation,
            TaskMajor::ContentEditing => self.content_editing,
            _ => self.default,
        }
    }
}

pub fn recommend_view(
    report: &DivergenceReport,
    major: TaskMajor,
    thresholds: &ViewThresholds,
) -> (Recommendation, String) {
    let theta = thresholds.for_major(major);
    if report.score > theta {
        (
            Recommendation::Comparison,
            format!(
                "Divergence {:.2} exceeds {theta:.2} for {major}: outputs differ too much to merge, compare them side by side. {}.",
                report.score, report.rationale
            ),
        )
    } else {
        (
            Recommendation::Fusion,
            format!(
                "Divergence {:.2} is within {theta:.2} for {major}: outputs overlap enough to integrate. {}.",
                report.score, report.rationale
            ),
        )
    }
}
