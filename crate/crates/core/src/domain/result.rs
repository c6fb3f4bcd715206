use serde::{Deserialize, Serialize};

use super::ModelId;

/// Number of characters shown on a result's summary card.
pub const SUMMARY_CHARS: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResultStatus {
    Streaming,
    Complete,
    Failed,
}

/// One model's response to a generation request.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProviderResult {
    pub model: ModelId,
    pub content: String,
    pub summary: String,
    /// Unix milliseconds.
    pub created_at: i64,
    pub status: ResultStatus,
    pub generation_index: u32,
    pub latency_ms: u64,
    pub error: Option<String>,
}

/// The leading `SUMMARY_CHARS` characters of `content`.
pub fn summarize(content: &str) -> String {
    content.chars().take(SUMMARY_CHARS).collect()
}

impl ProviderResult {
    pub fn complete(model: ModelId, content: String, created_at: i64, latency_ms: u64) -> Self {
        Self {
            model,
            summary: summarize(&content),
            content,
            created_at,
            status: ResultStatus::Complete,
            generation_index: 0,
            latency_ms,
            error: None,
        }
    }

    pub fn failed(model: ModelId, error: String, created_at: i64, latency_ms: u64) -> Self {
        Self {
            model,
            content: String::new(),
            summary: String::new(),
            created_at,
            status: ResultStatus::Failed,
            generation_index: 0,
            latency_ms,
            error: Some(error),
        }
    }

    pub fn with_generation_index(mut self, index: u32) -> Self {
        self.generation_index = index;
        self
    }

    pub fn is_complete(&self) -> bool {
        self.status == ResultStatus::Complete
    }
}
