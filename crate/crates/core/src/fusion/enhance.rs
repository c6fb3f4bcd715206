//! Enhancement guard: an LLM-revised document is accepted only if it keeps
//! the structure, participants and attributed content of the original.
//!
//! Revised unit ids carry lineage: `u-0-1.2` is the second piece of a split
//! of `u-0-1`; `u-0-1+u-0-2` is a merge of two units.

use std::collections::{BTreeSet, HashMap, HashSet};

use super::llm::json_object;
use crate::domain::{decode_fusion_document, validate_fusion_document, FusionDocument, ModelId};
use crate::taxonomy::Taxonomy;

pub const SKIPPED_NOTE: &str = "enhancement skipped";

fn base_id(part: &str) -> &str {
    match part.rsplit_once('.') {
        Some((base, piece)) if !piece.is_empty() && piece.bytes().all(|c| c.is_ascii_digit()) => base,
        _ => part,
    }
}

/// Checks a revised document against the original; on success returns it
/// with unit ids renumbered.
pub fn guard(original: &FusionDocument, revised: FusionDocument, taxonomy: &Taxonomy) -> Result<FusionDocument, String> {
    let report = validate_fusion_document(&revised, &original.participants, taxonomy);
    if !report.is_ok() {
        return Err(report.to_string());
    }
    if revised.task != original.task || revised.recommendation != original.recommendation {
        return Err("task or recommendation changed".into());
    }
    if revised.participants != original.participants {
        return Err("participants changed".into());
    }
    let names = |d: &FusionDocument| d.blocks.iter().map(|b| b.name.clone()).collect::<Vec<_>>();
    if names(&revised) != names(original) {
        return Err("blocks changed".into());
    }

    let mut origin: HashMap<&str, (usize, BTreeSet<BTreeSet<&ModelId>>)> = HashMap::new();
    for (b, block) in original.blocks.iter().enumerate() {
        for unit in &block.units {
            let sets = unit.variants.iter().map(|v| v.sources.iter().collect()).collect();
            origin.insert(unit.id.as_str(), (b, sets));
        }
    }

    let mut covered: HashMap<&str, BTreeSet<BTreeSet<&ModelId>>> = HashMap::new();
    for (b, block) in revised.blocks.iter().enumerate() {
        for unit in &block.units {
            let lineage: HashSet<&str> = unit.id.split('+').map(base_id).collect();
            let mut allowed = BTreeSet::new();
            for id in &lineage {
                let Some((ob, sets)) = origin.get(id) else {
                    return Err(format!("unit {} has no origin", unit.id));
                };
                if *ob != b {
                    return Err(format!("unit {} moved to another block", unit.id));
                }
                allowed.extend(sets.iter().cloned());
            }
            for v in &unit.variants {
                let set: BTreeSet<&ModelId> = v.sources.iter().collect();
                if !allowed.contains(&set) {
                    return Err(format!("unit {} has new sources", unit.id));
                }
                for id in &lineage {
                    covered.entry(id).or_default().insert(set.clone());
                }
            }
        }
    }
    for (id, (_, sets)) in &origin {
        let have = covered.get(id).cloned().unwrap_or_default();
        if !sets.is_subset(&have) {
            return Err(format!("content of unit {id} was dropped"));
        }
    }

    let mut doc = revised;
    doc.renumber_units();
    Ok(doc)
}

/// Parses and guards an enhancer answer.
pub fn accept_enhanced(original: &FusionDocument, answer: &str, taxonomy: &Taxonomy) -> Result<FusionDocument, String> {
    let json = json_object(answer).ok_or("no JSON object in answer")?;
    let revised = decode_fusion_document(json.as_bytes()).map_err(|e| e.to_string())?;
    guard(original, revised, taxonomy)
}

/// The original document annotated with the reason enhancement was skipped.
pub fn skipped(original: &FusionDocument, why: &str) -> FusionDocument {
    let mut doc = original.clone();
    if !doc.reason.is_empty() {
        doc.reason.push(' ');
    }
    doc.reason.push_str(&format!("({SKIPPED_NOTE}: {why})"));
    doc
}
