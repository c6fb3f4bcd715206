use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::domain::{ModelId, TaskMajor};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counts {
    pub likes: u64,
    pub dislikes: u64,
}

/// Laplace-smoothed like rate, always strictly inside (0, 1).
pub fn raw_score(counts: Counts) -> f64 {
    (counts.likes as f64 + 1.0) / ((counts.likes + counts.dislikes) as f64 + 2.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Score {
    pub raw: f64,
    pub normalized: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TableRow {
    pub major: TaskMajor,
    pub model: ModelId,
    pub likes: u64,
    pub dislikes: u64,
}

/// Like/dislike counts per (task major, model).
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "Rows", into = "Rows")]
pub struct PerformanceTable {
    counts: BTreeMap<(TaskMajor, ModelId), Counts>,
}

#[derive(Serialize, Deserialize)]
struct Rows {
    rows: Vec<TableRow>,
}

impl From<Rows> for PerformanceTable {
    fn from(rows: Rows) -> Self {
        let mut table = PerformanceTable::default();
        for r in rows.rows {
            table.add(r.major, &r.model, r.likes, r.dislikes);
        }
        table
    }
}

impl From<PerformanceTable> for Rows {
    fn from(table: PerformanceTable) -> Self {
        Rows {
            rows: table.rows(),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum SeedError {
    #[error("reading seed file: {0}")]
    Io(#[from] std::io::Error),
    #[error("parsing seed file: {0}")]
    Parse(#[from] serde_json::Error),
}

impl PerformanceTable {
    /// Loads aggregate counts from a `{"rows": [...]}` file.
    pub fn load_seed(path: &Path) -> Result<Self, SeedError> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }

    pub fn add(&mut self, major: TaskMajor, model: &ModelId, likes: u64, dislikes: u64) {
        let c = self.counts.entry((major, model.clone())).or_default();
        c.likes += likes;
        c.dislikes += dislikes;
    }

    pub fn merge(&mut self, other: &PerformanceTable) {
        for ((major, model), c) in &other.counts {
            self.add(*major, model, c.likes, c.dislikes);
        }
    }

    pub fn counts(&self, major: TaskMajor, model: &ModelId) -> Counts {
        self.counts
            .get(&(major, model.clone()))
            .copied()
            .unwrap_or_default()
    }

    pub fn rows(&self) -> Vec<TableRow> {
        self.counts
            .iter()
            .map(|((major, model), c)| TableRow {
                major: *major,
                model: model.clone(),
                likes: c.likes,
                dislikes: c.dislikes,
            })
            .collect()
    }

    pub fn has_feedback(&self, major: TaskMajor, models: &[ModelId]) -> bool {
        models.iter().any(|m| {
            let c = self.counts(major, m);
            c.likes + c.dislikes > 0
        })
    }

    /// Raw and normalized scores for `models`; normalized scores sum to one.
    pub fn scores(&self, major: TaskMajor, models: &[ModelId]) -> BTreeMap<ModelId, Score> {
        let raws: Vec<(ModelId, f64)> = models
            .iter()
            .map(|m| (m.clone(), raw_score(self.counts(major, m))))
            .collect();
        let total: f64 = raws.iter().map(|(_, r)| r).sum();
        raws.into_iter()
            .map(|(m, raw)| {
                (
                    m,
                    Score {
                        raw,
                        normalized: raw / total,
                    },
                )
            })
            .collect()
    }
}
