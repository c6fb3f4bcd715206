use serde::{Deserialize, Serialize};

use super::{ModelId, TaskLabel};

/// Name of the overflow block that holds content outside the task's block template.
pub const OTHER_BLOCK: &str = "Other";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Recommendation {
    Fusion,
    Comparison,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UnitStatus {
    Visible,
    Hidden,
}

/// One model-attributed rendering of a unit.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Variant {
    pub sources: Vec<ModelId>,
    pub content: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Unit {
    pub id: String,
    pub status: UnitStatus,
    pub active_variant: usize,
    pub edited: Option<String>,
    pub variants: Vec<Variant>,
}

impl Unit {
    pub fn new(id: impl Into<String>, variants: Vec<Variant>) -> Self {
        Self {
            id: id.into(),
            status: UnitStatus::Visible,
            active_variant: 0,
            edited: None,
            variants,
        }
    }

    /// Single variant attributed to two or more models.
    pub fn is_consensus(&self) -> bool {
        self.variants.len() == 1 && self.variants[0].sources.len() >= 2
    }

    pub fn is_visible(&self) -> bool {
        self.status == UnitStatus::Visible
    }

    /// Text that export uses: the edit overlay if present, else the active variant.
    pub fn effective_text(&self) -> &str {
        match &self.edited {
            Some(text) => text,
            None => self
                .variants
                .get(self.active_variant)
                .map(|v| v.content.as_str())
                .unwrap_or(""),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Block {
    pub name: String,
    pub units: Vec<Unit>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FusionDocument {
    pub task: TaskLabel,
    pub recommendation: Recommendation,
    pub reason: String,
    pub participants: Vec<ModelId>,
    pub blocks: Vec<Block>,
}

impl FusionDocument {
    pub fn units(&self) -> impl Iterator<Item = &Unit> {
        self.blocks.iter().flat_map(|b| b.units.iter())
    }

    pub fn unit(&self, id: &str) -> Option<&Unit> {
        self.units().find(|u| u.id == id)
    }

    pub fn unit_mut(&mut self, id: &str) -> Option<&mut Unit> {
        self.blocks
            .iter_mut()
            .flat_map(|b| b.units.iter_mut())
            .find(|u| u.id == id)
    }

    pub fn unit_count(&self) -> usize {
        self.blocks.iter().map(|b| b.units.len()).sum()
    }

    /// Reassigns `u-<block>-<unit>` ids in document order.
    pub fn renumber_units(&mut self) {
        for (b, block) in self.blocks.iter_mut().enumerate() {
            for (u, unit) in block.units.iter_mut().enumerate() {
                unit.id = unit_id(b, u);
            }
        }
    }
}

pub fn unit_id(block: usize, unit: usize) -> String {
    format!("u-{block}-{unit}")
}

/// How far apart a set of model outputs are.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DivergenceReport {
    pub score: f64,
    pub aligned_mass: f64,
    pub rationale: String,
}

impl DivergenceReport {
    pub fn new(aligned_mass: f64, rationale: String) -> Self {
        let aligned_mass = aligned_mass.clamp(0.0, 1.0);
        Self {
            score: 1.0 - aligned_mass,
            aligned_mass,
            rationale,
        }
    }
}
