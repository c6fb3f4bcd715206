//! Interactive operations over a fusion document: variant switching,
//! hiding, edit overlays and plain-text export.

use serde::{Deserialize, Serialize};

use crate::domain::{FusionDocument, UnitStatus};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Next,
    Prev,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DocError {
    #[error("unknown unit {0}")]
    UnknownUnit(String),
    #[error("unit {0} has a single variant")]
    SingleVariant(String),
    #[error("edit text is empty")]
    EmptyText,
    #[error("bad payload for {op}: {reason}")]
    BadPayload { op: &'static str, reason: String },
}

pub fn switch_variant(
    doc: &FusionDocument,
    unit_id: &str,
    direction: Direction,
) -> Result<FusionDocument, DocError> {
    let mut doc = doc.clone();
    let unit = doc
        .unit_mut(unit_id)
        .ok_or_else(|| DocError::UnknownUnit(unit_id.to_owned()))?;
    let n = unit.variants.len();
    if n < 2 {
        return Err(DocError::SingleVariant(unit_id.to_owned()));
    }
    unit.active_variant = match direction {
        Direction::Next => (unit.active_variant + 1) % n,
        Direction::Prev => (unit.active_variant + n - 1) % n,
    };
    Ok(doc)
}

pub fn set_hidden(doc: &FusionDocument, unit_id: &str, hidden: bool) -> Result<FusionDocument, DocError> {
    let mut doc = doc.clone();
    let unit = doc
        .unit_mut(unit_id)
        .ok_or_else(|| DocError::UnknownUnit(unit_id.to_owned()))?;
    unit.status = if hidden {
        UnitStatus::Hidden
    } else {
        UnitStatus::Visible
    };
    Ok(doc)
}

/// Sets the edit overlay. Variant text is never touched.
pub fn edit_unit(doc: &FusionDocument, unit_id: &str, text: &str) -> Result<FusionDocument, DocError> {
    if text.is_empty() {
        return Err(DocError::EmptyText);
    }
    let mut doc = doc.clone();
    let unit = doc
        .unit_mut(unit_id)
        .ok_or_else(|| DocError::UnknownUnit(unit_id.to_owned()))?;
    unit.edited = Some(text.to_owned());
    Ok(doc)
}

pub fn clear_edit(doc: &FusionDocument, unit_id: &str) -> Result<FusionDocument, DocError> {
    let mut doc = doc.clone();
    let unit = doc
        .unit_mut(unit_id)
        .ok_or_else(|| DocError::UnknownUnit(unit_id.to_owned()))?;
    unit.edited = None;
    Ok(doc)
}

/// Ids of hidden units in document order.
pub fn list_hidden(doc: &FusionDocument) -> Vec<String> {
    doc.units()
        .filter(|u| u.status == UnitStatus::Hidden)
        .map(|u| u.id.clone())
        .collect()
}

/// Visible units' effective text in block/unit order, one blank line apart.
pub fn export(doc: &FusionDocument) -> String {
    doc.units()
        .filter(|u| u.is_visible())
        .map(|u| u.effective_text())
        .collect::<Vec<_>>()
        .join("\n\n")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OpKind {
    Switch,
    Hide,
    Show,
    Edit,
    ClearEdit,
}

/// Wire form of a document operation: `{"op", "unit", "payload"}`. The
/// payload is the direction for `switch` (default `next`) and the text for `edit`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DocOp {
    pub op: OpKind,
    pub unit: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub payload: Option<String>,
}

impl DocOp {
    pub fn new(op: OpKind, unit: impl Into<String>) -> Self {
        Self {
            op,
            unit: unit.into(),
            payload: None,
        }
    }

    pub fn switch(unit: impl Into<String>, direction: Direction) -> Self {
        let payload = match direction {
            Direction::Next => "next",
            Direction::Prev => "prev",
        };
        Self {
            op: OpKind::Switch,
            unit: unit.into(),
            payload: Some(payload.to_owned()),
        }
    }

    pub fn edit(unit: impl Into<String>, text: impl Into<String>) -> Self {
        Self {
            op: OpKind::Edit,
            unit: unit.into(),
            payload: Some(text.into()),
        }
    }
}

pub fn apply_op(doc: &FusionDocument, op: &DocOp) -> Result<FusionDocument, DocError> {
    match op.op {
        OpKind::Switch => {
            let direction = match op.payload.as_deref() {
                None | Some("next") => Direction::Next,
                Some("prev") => Direction::Prev,
                Some(other) => {
                    return Err(DocError::BadPayload {
                        op: "switch",
                        reason: format!("expected next or prev, got {other:?}"),
                    })
                }
            };
            switch_variant(doc, &op.unit, direction)
        }
        OpKind::Hide => set_hidden(doc, &op.unit, true),
        OpKind::Show => set_hidden(doc, &op.unit, false),
        OpKind::Edit => edit_unit(doc, &op.unit, op.payload.as_deref().unwrap_or("")),
        OpKind::ClearEdit => clear_edit(doc, &op.unit),
    }
}
