use std::collections::{BTreeSet, HashSet};
use std::fmt;

use super::{FusionDocument, ModelId, OTHER_BLOCK};
use crate::taxonomy::Taxonomy;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ViolationKind {
    UnregisteredParticipant,
    DuplicateParticipant,
    UnknownBlockName,
    EmptyVariants,
    ActiveVariantOutOfRange,
    DuplicateUnitId,
    EmptyEdit,
    EmptySources,
    DuplicateSource,
    UnknownSource,
    EmptyContent,
    DuplicateSourceSet,
}

impl ViolationKind {
    fn describe(self) -> &'static str {
        use ViolationKind::*;
        match self {
            UnregisteredParticipant => "unregistered participant",
            DuplicateParticipant => "duplicate participant",
            UnknownBlockName => "block name not in task template",
            EmptyVariants => "unit has no variants",
            ActiveVariantOutOfRange => "active_variant out of range",
            DuplicateUnitId => "duplicate unit id",
            EmptyEdit => "empty edit",
            EmptySources => "variant has no sources",
            DuplicateSource => "duplicate source",
            UnknownSource => "unknown source",
            EmptyContent => "empty variant content",
            DuplicateSourceSet => "variants share a source set",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub kind: ViolationKind,
    /// Location such as `blocks[0].units[1].variants[0]`.
    pub path: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} at {}", self.kind.describe(), self.path)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn has(&self, kind: ViolationKind) -> bool {
        self.violations.iter().any(|v| v.kind == kind)
    }

    fn push(&mut self, kind: ViolationKind, path: impl Into<String>) {
        self.violations.push(Violation {
            kind,
            path: path.into(),
        });
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_ok() {
            return f.write_str("ok");
        }
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

/// Checks every structural invariant of a fusion document. Never fails; all
/// violations are collected into the report.
pub fn validate_fusion_document(
    doc: &FusionDocument,
    registry: &[ModelId],
    taxonomy: &Taxonomy,
) -> ValidationReport {
    let mut report = ValidationReport::default();
    let registered: HashSet<&ModelId> = registry.iter().collect();
    let mut participants = HashSet::new();
    for (i, p) in doc.participants.iter().enumerate() {
        if !registered.contains(p) {
            report.push(ViolationKind::UnregisteredParticipant, format!("participants[{i}]"));
        }
        if !participants.insert(p) {
            report.push(ViolationKind::DuplicateParticipant, format!("participants[{i}]"));
        }
    }

    let template = taxonomy.block_template(doc.task.major());
    let mut unit_ids = HashSet::new();
    for (b, block) in doc.blocks.iter().enumerate() {
        if block.name != OTHER_BLOCK && !template.iter().any(|n| n == &block.name) {
            report.push(ViolationKind::UnknownBlockName, format!("blocks[{b}]"));
        }
        for (u, unit) in block.units.iter().enumerate() {
            let path = format!("blocks[{b}].units[{u}]");
            if !unit_ids.insert(unit.id.as_str()) {
                report.push(ViolationKind::DuplicateUnitId, path.clone());
            }
            if unit.variants.is_empty() {
                report.push(ViolationKind::EmptyVariants, path.clone());
            }
            if unit.active_variant >= unit.variants.len() {
                report.push(ViolationKind::ActiveVariantOutOfRange, path.clone());
            }
            if unit.edited.as_deref().is_some_and(|t| t.is_empty()) {
                report.push(ViolationKind::EmptyEdit, path.clone());
            }
            let mut source_sets = HashSet::new();
            for (v, variant) in unit.variants.iter().enumerate() {
                let vpath = format!("{path}.variants[{v}]");
                if variant.sources.is_empty() {
                    report.push(ViolationKind::EmptySources, vpath.clone());
                }
                let set: BTreeSet<&ModelId> = variant.sources.iter().collect();
                if set.len() != variant.sources.len() {
                    report.push(ViolationKind::DuplicateSource, vpath.clone());
                }
                if variant.sources.iter().any(|s| !participants.contains(s)) {
                    report.push(ViolationKind::UnknownSource, vpath.clone());
                }
                if variant.content.is_empty() {
                    report.push(ViolationKind::EmptyContent, vpath.clone());
                }
                if unit.variants.len() >= 2 && !source_sets.insert(set) {
                    report.push(ViolationKind::DuplicateSourceSet, vpath);
                }
            }
        }
    }
    report
}
