//! Dispatch planning: which models auto-run for a query, in what order, and why.

use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::domain::{ModelId, TaskLabel, TaskMajor};
use crate::store::PerformanceTable;

/// Models auto-run for content generation.
pub const GENERATION_AUTO_RUN: usize = 4;
/// Models auto-run for every other major.
pub const DEFAULT_AUTO_RUN: usize = 2;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DispatchPlan {
    pub models: Vec<ModelId>,
    pub auto_run_count: usize,
    pub reasons: BTreeMap<ModelId, String>,
}

impl DispatchPlan {
    pub fn auto_run(&self) -> &[ModelId] {
        &self.models[..self.auto_run_count]
    }

    pub fn position(&self, model: &ModelId) -> Option<usize> {
        self.models.iter().position(|m| m == model)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DispatchError {
    #[error("pinned model {0} is not registered")]
    UnknownPin(ModelId),
}

pub fn auto_run_count(major: TaskMajor, registry_size: usize) -> usize {
    let quota = match major {
        TaskMajor::ContentGeneration => GENERATION_AUTO_RUN,
        _ => DEFAULT_AUTO_RUN,
    };
    registry_size.min(quota)
}

/// Plans dispatch from the feedback table's normalized scores for the task's major.
pub fn plan(
    task: TaskLabel,
    pins: &[ModelId],
    table: &PerformanceTable,
    registry: &[ModelId],
) -> Result<DispatchPlan, DispatchError> {
    let scores: BTreeMap<ModelId, f64> = table
        .scores(task.major(), registry)
        .into_iter()
        .map(|(m, s)| (m, s.normalized))
        .collect();
    let cold = !table.has_feedback(task.major(), registry);
    plan_from_scores(task, pins, &scores, registry, cold)
}

/// Pins first in the given order, then the rest by descending score with
/// lexicographic tie-break. Missing scores count as zero.
pub fn plan_from_scores(
    task: TaskLabel,
    pins: &[ModelId],
    scores: &BTreeMap<ModelId, f64>,
    registry: &[ModelId],
    cold_start: bool,
) -> Result<DispatchPlan, DispatchError> {
    let mut seen = HashSet::new();
    let mut models = Vec::with_capacity(registry.len());
    for pin in pins {
        if !registry.contains(pin) {
            return Err(DispatchError::UnknownPin(pin.clone()));
        }
        if seen.insert(pin) {
            models.push(pin.clone());
        }
    }
    let pinned = models.len();

    let score = |m: &ModelId| scores.get(m).copied().unwrap_or(0.0);
    let mut rest: Vec<&ModelId> = registry.iter().filter(|m| !seen.contains(m)).collect();
    rest.sort_by(|a, b| score(b).total_cmp(&score(a)).then_with(|| a.cmp(b)));
    rest.dedup();
    models.extend(rest.into_iter().cloned());

    let major = task.major();
    let reasons = models
        .iter()
        .enumerate()
        .map(|(i, m)| {
            let reason = if i < pinned {
                "pinned by user".to_owned()
            } else if cold_start {
                format!("ranked #{} for {major}, no feedback yet", i + 1)
            } else {
                format!("ranked #{} for {major}, score {:.2}", i + 1, score(m))
            };
            (m.clone(), reason)
        })
        .collect();

    Ok(DispatchPlan {
        auto_run_count: auto_run_count(major, models.len()),
        models,
        reasons,
    })
}
