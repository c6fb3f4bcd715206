//! Token-trigram cosine similarity.
//!
//! Text is normalized to lowercase alphanumeric tokens and padded with two
//! boundary markers on each side, so every trigram contains a real token and
//! short units still produce features.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::taxonomy::normalize;

const START: &str = "\u{2}";
const END: &str = "\u{3}";

pub fn tokens(text: &str) -> Vec<String> {
    normalize(text)
        .split(' ')
        .filter(|t| !t.is_empty())
        .map(str::to_owned)
        .collect()
}

pub fn token_len(text: &str) -> usize {
    tokens(text).len()
}

/// Padded word-trigram frequency vector.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TrigramVector {
    counts: HashMap<String, u64>,
    norm_sq: u64,
}

impl TrigramVector {
    pub fn new(text: &str) -> Self {
        let toks = tokens(text);
        if toks.is_empty() {
            return Self::default();
        }
        let mut padded: Vec<&str> = vec![START, START];
        padded.extend(toks.iter().map(String::as_str));
        padded.extend([END, END]);
        let mut counts: HashMap<String, u64> = HashMap::new();
        for w in padded.windows(3) {
            *counts.entry(w.join("\u{1f}")).or_default() += 1;
        }
        let norm_sq = counts.values().map(|c| c * c).sum();
        Self { counts, norm_sq }
    }

    pub fn is_empty(&self) -> bool {
        self.norm_sq == 0
    }

    /// Cosine similarity in [0, 1]. Integer dot products keep it exactly symmetric.
    pub fn cosine(&self, other: &TrigramVector) -> f64 {
        if self.is_empty() || other.is_empty() {
            return 0.0;
        }
        let (small, large) = if self.counts.len() <= other.counts.len() {
            (self, other)
        } else {
            (other, self)
        };
        let dot: u64 = small
            .counts
            .iter()
            .filter_map(|(g, c)| large.counts.get(g).map(|d| c * d))
            .sum();
        let denom = (self.norm_sq as f64 * other.norm_sq as f64).sqrt();
        (dot as f64 / denom).clamp(0.0, 1.0)
    }
}

pub fn similarity(a: &str, b: &str) -> f64 {
    TrigramVector::new(a).cosine(&TrigramVector::new(b))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeClass {
    Merge,
    Parallel,
    None,
}

/// Similarity cut-offs: merge at or above `merge`, parallel at or above `align`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub merge: f64,
    pub align: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            merge: 0.90,
            align: 0.55,
        }
    }
}

impl Thresholds {
    pub fn is_valid(&self) -> bool {
        0.0 < self.align && self.align < self.merge && self.merge <= 1.0
    }

    pub fn classify(&self, similarity: f64) -> EdgeClass {
        if similarity >= self.merge {
            EdgeClass::Merge
        } else if similarity >= self.align {
            EdgeClass::Parallel
        } else {
            EdgeClass::None
        }
    }
}
