use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::classifier::EngineTag;
use crate::dispatch::DispatchPlan;
use crate::document::DocOp;
use crate::domain::{DocumentId, FusionDocument, ModelId, ProviderResult, SessionId, TaskLabel, TurnId};
use crate::gateway::CitedContext;

/// Comments shorter than this many characters are rejected.
pub const MIN_COMMENT_CHARS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeedbackKind {
    Like,
    Dislike,
    Comment,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeedbackRecord {
    pub session: SessionId,
    pub turn: TurnId,
    pub model: ModelId,
    pub kind: FeedbackKind,
    pub text: Option<String>,
    pub timestamp: i64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionRecord {
    pub id: SessionId,
    pub created_at: i64,
    pub turns: Vec<TurnId>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TurnRecord {
    pub id: TurnId,
    pub session: SessionId,
    /// Store-wide turn number; keys generation history in the gateway.
    pub seq: u64,
    pub prompt: String,
    pub label: TaskLabel,
    pub confidence: f64,
    pub engine: EngineTag,
    pub plan: DispatchPlan,
    pub context: Vec<CitedContext>,
    pub created_at: i64,
    /// Models whose first generation has been started, in start order.
    #[serde(default)]
    pub started: Vec<ModelId>,
    /// Every generation per model, oldest first.
    #[serde(default)]
    pub results: BTreeMap<ModelId, Vec<ProviderResult>>,
    /// Current like/dislike state per model.
    #[serde(default)]
    pub ratings: BTreeMap<ModelId, FeedbackKind>,
    #[serde(default)]
    pub comments: Vec<FeedbackRecord>,
    #[serde(default)]
    pub documents: Vec<DocumentId>,
}

impl TurnRecord {
    /// Latest generation of `model`.
    pub fn latest(&self, model: &ModelId) -> Option<&ProviderResult> {
        self.results.get(model).and_then(|r| r.last())
    }

    /// Latest complete generation of `model`.
    pub fn latest_complete(&self, model: &ModelId) -> Option<&ProviderResult> {
        self.latest(model).filter(|r| r.is_complete())
    }

    /// First model in plan order with a complete result.
    pub fn first_complete(&self) -> Option<&ProviderResult> {
        self.plan.models.iter().find_map(|m| self.latest_complete(m))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DocumentRecord {
    pub id: DocumentId,
    pub turn: TurnId,
    pub original: FusionDocument,
    /// Applied operations in order; replaying them on `original` yields `document`.
    pub ops: Vec<DocOp>,
    pub document: FusionDocument,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StoredDocument {
    pub id: DocumentId,
    pub document: FusionDocument,
}

/// One turn as returned by `history`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistoryEntry {
    #[serde(flatten)]
    pub turn: TurnRecord,
    pub fusion: Vec<StoredDocument>,
}
