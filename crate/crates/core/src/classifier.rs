//! Task-purpose classification: an LLM-backed engine whose answers are
//! checked against the taxonomy, with a deterministic keyword fallback.

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::domain::{ModelId, SessionId, TaskLabel, TaskMajor, TaskMinor};
use crate::gateway::{Gateway, GenerationRequest};
use crate::taxonomy::{normalize, Taxonomy};

pub const DEFAULT_TEMPLATE: &str = include_str!("../assets/prompts/classifier.txt");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EngineTag {
    Llm,
    Fallback,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub label: TaskLabel,
    pub confidence: f64,
    pub engine: EngineTag,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ClassifyError {
    #[error("prompt is empty")]
    EmptyPrompt,
}

/// Keyword-table classifier. Pure: same prompt and taxonomy, same answer.
pub fn classify_fallback(taxonomy: &Taxonomy, prompt: &str) -> Classification {
    let text = format!(" {} ", normalize(prompt));
    let mut best: Option<(TaskMinor, usize)> = None;
    for minor in taxonomy.minors_in_order() {
        let hits = minor
            .keywords
            .iter()
            .map(|k| normalize(k))
            .filter(|k| !k.is_empty() && text.contains(&format!(" {k} ")))
            .count();
        if hits > 0 && best.is_none_or(|(_, h)| hits > h) {
            best = Some((minor.id, hits));
        }
    }
    match best {
        Some((minor, hits)) => Classification {
            label: TaskLabel::from_minor(minor),
            confidence: hits as f64 / (hits as f64 + 1.0),
            engine: EngineTag::Fallback,
        },
        None => Classification {
            label: TaskLabel::OTHER,
            confidence: 0.0,
            engine: EngineTag::Fallback,
        },
    }
}

/// Parses a model's classification answer, rejecting labels outside the taxonomy.
pub fn parse_llm_answer(taxonomy: &Taxonomy, answer: &str) -> Option<(TaskLabel, f64)> {
    let start = answer.find('{')?;
    let end = answer.rfind('}')?;
    if end < start {
        return None;
    }
    let value: Value = serde_json::from_str(&answer[start..=end]).ok()?;
    let major = TaskMajor::from_wire(value.get("major")?.as_str()?)?;
    let minor = TaskMinor::from_wire(value.get("minor")?.as_str()?)?;
    let label = TaskLabel::new(major, minor).ok()?;
    if !taxonomy.contains(label) {
        return None;
    }
    let confidence = value
        .get("confidence")
        .and_then(Value::as_f64)
        .filter(|c| c.is_finite())
        .unwrap_or(0.5)
        .clamp(0.0, 1.0);
    Some((label, confidence))
}

pub struct LlmClassifier {
    pub gateway: Arc<Gateway>,
    pub model: ModelId,
    pub template: String,
}

pub struct Classifier {
    taxonomy: Arc<Taxonomy>,
    llm: Option<LlmClassifier>,
}

impl Classifier {
    pub fn fallback(taxonomy: Arc<Taxonomy>) -> Self {
        Self { taxonomy, llm: None }
    }

    pub fn with_llm(taxonomy: Arc<Taxonomy>, llm: LlmClassifier) -> Self {
        Self {
            taxonomy,
            llm: Some(llm),
        }
    }

    pub fn taxonomy(&self) -> &Taxonomy {
        &self.taxonomy
    }

    /// Builds the LLM prompt; `context` holds earlier prompts of the session.
    pub fn render_prompt(&self, template: &str, prompt: &str, context: &[String]) -> String {
        let context = if context.is_empty() {
            "(none)".to_owned()
        } else {
            context
                .iter()
                .enumerate()
                .map(|(i, c)| format!("{}. {c}", i + 1))
                .collect::<Vec<_>>()
                .join("\n")
        };
        template
            .replace("{taxonomy}", &self.taxonomy.describe())
            .replace("{context}", &context)
            .replace("{query}", prompt)
    }

    /// Classifies a prompt. Never fails for a non-empty prompt: LLM answers
    /// outside the taxonomy are retried once, then the keyword table decides.
    pub async fn classify(
        &self,
        prompt: &str,
        context: &[String],
        session: &SessionId,
    ) -> Result<Classification, ClassifyError> {
        if prompt.trim().is_empty() {
            return Err(ClassifyError::EmptyPrompt);
        }
        if let Some(llm) = &self.llm {
            let text = self.render_prompt(&llm.template, prompt, context);
            let req = GenerationRequest::new(text, format!("{session}#classify")).with_turn(0);
            for _ in 0..2 {
                let Ok(result) = llm.gateway.complete(&llm.model, &req).await else {
                    break;
                };
                if !result.is_complete() {
                    break;
                }
                if let Some((label, confidence)) = parse_llm_answer(&self.taxonomy, &result.content) {
                    return Ok(Classification {
                        label,
                        confidence,
                        engine: EngineTag::Llm,
                    });
                }
            }
        }
        Ok(classify_fallback(&self.taxonomy, prompt))
    }
}
