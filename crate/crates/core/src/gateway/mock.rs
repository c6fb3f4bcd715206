//! Scripted, network-free provider used by tests, examples and mock configs.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use async_trait::async_trait;
use futures::stream::{self, StreamExt};
use serde::{Deserialize, Serialize};

use super::{ChunkStream, Provider, ProviderError, UpstreamPrompt};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Chunking {
    /// Each chunk is one word plus its trailing whitespace.
    #[default]
    Words,
    /// Fixed-size character chunks.
    Chars(usize),
    Whole,
}

fn default_texts() -> Vec<String> {
    vec!["mock response".to_owned()]
}

/// Behaviour of a mock provider. Texts are served in order, cycling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MockScript {
    #[serde(default = "default_texts")]
    pub texts: Vec<String>,
    #[serde(default)]
    pub chunking: Chunking,
    /// Delay before the first chunk.
    #[serde(default)]
    pub delay_ms: u64,
    #[serde(default)]
    pub chunk_delay_ms: u64,
    /// When set, every call fails with this message after `delay_ms`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fail: Option<String>,
}

impl Default for MockScript {
    fn default() -> Self {
        Self {
            texts: default_texts(),
            chunking: Chunking::Words,
            delay_ms: 0,
            chunk_delay_ms: 0,
            fail: None,
        }
    }
}

impl MockScript {
    pub fn text(text: impl Into<String>) -> Self {
        Self {
            texts: vec![text.into()],
            ..Self::default()
        }
    }

    pub fn texts<I, S>(texts: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self {
            texts: texts.into_iter().map(Into::into).collect(),
            ..Self::default()
        }
    }

    pub fn failing(message: impl Into<String>) -> Self {
        Self {
            fail: Some(message.into()),
            ..Self::default()
        }
    }

    pub fn with_delay(mut self, ms: u64) -> Self {
        self.delay_ms = ms;
        self
    }

    pub fn with_chunking(mut self, chunking: Chunking) -> Self {
        self.chunking = chunking;
        self
    }
}

/// Shared view of every upstream prompt a mock has received.
#[derive(Debug, Clone, Default)]
pub struct PromptCapture(Arc<Mutex<Vec<String>>>);

impl PromptCapture {
    pub fn prompts(&self) -> Vec<String> {
        self.0.lock().unwrap().clone()
    }

    pub fn last(&self) -> Option<String> {
        self.0.lock().unwrap().last().cloned()
    }

    fn record(&self, prompt: &str) {
        self.0.lock().unwrap().push(prompt.to_owned());
    }
}

type Responder = Arc<dyn Fn(&str, usize) -> String + Send + Sync>;

pub struct MockProvider {
    script: MockScript,
    responder: Option<Responder>,
    calls: AtomicUsize,
    capture: PromptCapture,
}

impl MockProvider {
    pub fn new(script: MockScript) -> Self {
        Self {
            script,
            responder: None,
            calls: AtomicUsize::new(0),
            capture: PromptCapture::default(),
        }
    }

    /// Replaces the scripted texts with `f(prompt, call_index)`.
    pub fn with_responder<F>(mut self, f: F) -> Self
    where
        F: Fn(&str, usize) -> String + Send + Sync + 'static,
    {
        self.responder = Some(Arc::new(f));
        self
    }

    pub fn capture(&self) -> PromptCapture {
        self.capture.clone()
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }
}

pub fn split_chunks(text: &str, chunking: Chunking) -> Vec<String> {
    match chunking {
        Chunking::Whole => {
            if text.is_empty() {
                vec![]
            } else {
                vec![text.to_owned()]
            }
        }
        Chunking::Chars(n) => {
            let chars: Vec<char> = text.chars().collect();
            chars
                .chunks(n.max(1))
                .map(|c| c.iter().collect())
                .collect()
        }
        Chunking::Words => {
            let mut chunks = Vec::new();
            let mut current = String::new();
            let mut in_space = false;
            for c in text.chars() {
                if !c.is_whitespace() && in_space {
                    chunks.push(std::mem::take(&mut current));
                }
                in_space = c.is_whitespace();
                current.push(c);
            }
            if !current.is_empty() {
                chunks.push(current);
            }
            chunks
        }
    }
}

#[async_trait]
impl Provider for MockProvider {
    async fn stream(&self, prompt: &UpstreamPrompt) -> Result<ChunkStream, ProviderError> {
        let call = self.calls.fetch_add(1, Ordering::SeqCst);
        self.capture.record(&prompt.text);
        if self.script.delay_ms > 0 {
            tokio::time::sleep(Duration::from_millis(self.script.delay_ms)).await;
        }
        if let Some(message) = &self.script.fail {
            return Err(ProviderError::Upstream(message.clone()));
        }
        let text = match &self.responder {
            Some(f) => f(&prompt.text, call),
            None if self.script.texts.is_empty() => String::new(),
            None => self.script.texts[call % self.script.texts.len()].clone(),
        };
        let chunks = split_chunks(&text, self.script.chunking);
        let gap = Duration::from_millis(self.script.chunk_delay_ms);
        let s = stream::iter(chunks.into_iter().enumerate()).then(move |(i, chunk)| async move {
            if i > 0 && !gap.is_zero() {
                tokio::time::sleep(gap).await;
            }
            Ok(chunk)
        });
        Ok(s.boxed())
    }
}
