//! LLM-backed structuring and alignment. Answers are validated; callers fall
//! back to the deterministic engines when validation fails.

use std::collections::{HashMap, HashSet};
use std::sync::Arc;

use serde::Deserialize;

use super::align::{AlignmentEdge, UnitRef};
use super::criteria::{CriteriaSet, PromptSet};
use super::segment::{block_name_for, squash_whitespace, SegmentedBlock, SegmentedOutput};
use super::similarity::Thresholds;
use crate::domain::{ModelId, TaskLabel, OTHER_BLOCK};
use crate::gateway::{Gateway, GenerationRequest};
use crate::taxonomy::Taxonomy;

/// Slice from the first `{` to the last `}`.
pub(crate) fn json_object(answer: &str) -> Option<&str> {
    let start = answer.find('{')?;
    let end = answer.rfind('}')?;
    (end >= start).then(|| &answer[start..=end])
}

/// A model used for one of the fusion stages.
#[derive(Clone)]
pub struct LlmStage {
    pub gateway: Arc<Gateway>,
    pub model: ModelId,
}

impl LlmStage {
    /// Sends `prompt` up to twice, returning the first answer `accept` takes.
    pub async fn ask<T>(&self, prompt: String, session: &str, accept: impl Fn(&str) -> Option<T>) -> Option<T> {
        let req = GenerationRequest::new(prompt, session.to_owned());
        for _ in 0..2 {
            let result = self.gateway.complete(&self.model, &req).await.ok()?;
            if !result.is_complete() {
                continue;
            }
            if let Some(v) = accept(&result.content) {
                return Some(v);
            }
        }
        None
    }
}

pub fn render_structure(prompts: &PromptSet, taxonomy: &Taxonomy, task: TaskLabel, content: &str) -> String {
    let template = taxonomy.block_template(task.major());
    let blocks = template
        .iter()
        .map(|b| format!("\"{b}\""))
        .collect::<Vec<_>>()
        .join(", ");
    prompts
        .structure
        .replace("{task}", &taxonomy.major(task.major()).name)
        .replace("{blocks}", &blocks)
        .replace("{content}", content)
}

#[derive(Deserialize)]
struct StructureAnswer {
    blocks: Vec<StructureBlock>,
}

#[derive(Deserialize)]
struct StructureBlock {
    name: String,
    units: Vec<String>,
}

/// Accepts a structuring answer when every block name is allowed and every
/// unit is copied verbatim (up to whitespace) from `content`.
pub fn parse_structure(model: &ModelId, answer: &str, content: &str, template: &[String]) -> Option<SegmentedOutput> {
    let parsed: StructureAnswer = serde_json::from_str(json_object(answer)?).ok()?;
    let source = squash_whitespace(content);
    let mut blocks = Vec::new();
    for block in parsed.blocks {
        let name = block_name_for(&block.name, template);
        if name == OTHER_BLOCK && !block.name.trim().eq_ignore_ascii_case(OTHER_BLOCK) {
            return None;
        }
        let mut units = Vec::new();
        for unit in block.units {
            let unit = unit.trim().to_owned();
            if unit.is_empty() || !source.contains(&squash_whitespace(&unit)) {
                return None;
            }
            units.push(unit);
        }
        if !units.is_empty() {
            blocks.push(SegmentedBlock { name, units });
        }
    }
    if blocks.is_empty() {
        return None;
    }
    Some(SegmentedOutput { model: model.clone(), blocks })
}

fn unit_ref_text(r: &UnitRef) -> String {
    format!("{}/{}/{}", r.model, r.block, r.unit)
}

fn parse_unit_ref(s: &str) -> Option<UnitRef> {
    let mut parts = s.trim().split('/');
    let model = ModelId::new(parts.next()?).ok()?;
    let block = parts.next()?.parse().ok()?;
    let unit = parts.next()?.parse().ok()?;
    parts.next().is_none().then_some(UnitRef { model, block, unit })
}

pub fn render_align(
    prompts: &PromptSet,
    taxonomy: &Taxonomy,
    criteria: &CriteriaSet,
    task: TaskLabel,
    segmented: &[SegmentedOutput],
    thresholds: Thresholds,
) -> String {
    let mut units = String::new();
    for seg in segmented {
        for (b, block) in seg.blocks.iter().enumerate() {
            for (u, text) in block.units.iter().enumerate() {
                let r = UnitRef { model: seg.model.clone(), block: b, unit: u };
                units.push_str(&format!("{} [{}]: {}\n", unit_ref_text(&r), block.name, text));
            }
        }
    }
    prompts
        .align_for(task.major())
        .replace("{task}", &format!("{} / {}", taxonomy.major(task.major()).name, taxonomy.minor(task.minor()).name))
        .replace("{major_criteria}", criteria.major(task.major()))
        .replace("{minor_criteria}", criteria.minor(task.minor()))
        .replace("{units}", units.trim_end())
        .replace("{merge}", &format!("{:.2}", thresholds.merge))
        .replace("{align}", &format!("{:.2}", thresholds.align))
}

#[derive(Deserialize)]
struct AlignAnswer {
    edges: Vec<AlignAnswerEdge>,
}

#[derive(Deserialize)]
struct AlignAnswerEdge {
    left: String,
    right: String,
    similarity: f64,
}

/// Accepts an alignment answer whose edges join existing units of two
/// different models inside one block name, each unit at most once per
/// partner model. Classes are derived from the thresholds.
pub fn parse_alignment(answer: &str, segmented: &[SegmentedOutput], thresholds: Thresholds) -> Option<Vec<AlignmentEdge>> {
    let parsed: AlignAnswer = serde_json::from_str(json_object(answer)?).ok()?;
    let position: HashMap<&ModelId, usize> = segmented.iter().enumerate().map(|(i, s)| (&s.model, i)).collect();
    let name_of = |r: &UnitRef| -> Option<&str> {
        let seg = &segmented[*position.get(&r.model)?];
        let block = seg.blocks.get(r.block)?;
        block.units.get(r.unit)?;
        Some(block.name.as_str())
    };
    let mut used: HashSet<(UnitRef, ModelId)> = HashSet::new();
    let mut edges = Vec::new();
    for e in parsed.edges {
        let (mut left, mut right) = (parse_unit_ref(&e.left)?, parse_unit_ref(&e.right)?);
        if !(0.0..=1.0).contains(&e.similarity) || left.model == right.model {
            return None;
        }
        if name_of(&left)? != name_of(&right)? {
            return None;
        }
        if position[&left.model] > position[&right.model] {
            std::mem::swap(&mut left, &mut right);
        }
        if !used.insert((left.clone(), right.model.clone())) || !used.insert((right.clone(), left.model.clone())) {
            return None;
        }
        edges.push(AlignmentEdge {
            class: thresholds.classify(e.similarity),
            left,
            right,
            similarity: e.similarity,
        });
    }
    Some(edges)
}
