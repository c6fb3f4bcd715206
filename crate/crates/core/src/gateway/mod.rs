//! Uniform access to model backends: an ordered registry, streamed
//! generation, concurrent fan-out and regeneration with history.

mod config;
mod mock;
mod openai;

use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, Mutex, RwLock};
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use async_trait::async_trait;
use futures::stream::{self, BoxStream, StreamExt};
use serde::{Deserialize, Serialize};

pub use config::{ConfigError, ProviderConfig, ProviderKind, ProvidersFile};
pub use mock::{split_chunks, Chunking, MockProvider, MockScript, PromptCapture};
pub use openai::{parse_delta, OpenAiCompatible};

use crate::domain::{ModelId, ProviderResult, SessionId};

pub type ChunkStream = BoxStream<'static, Result<String, ProviderError>>;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ProviderError {
    #[error("transport error: {0}")]
    Transport(String),
    #[error("upstream error: {0}")]
    Upstream(String),
    #[error("protocol error: {0}")]
    Protocol(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("timed out after {0:?}")]
    Timeout(Duration),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GatewayError {
    #[error("model {0} is already registered")]
    DuplicateModel(ModelId),
    #[error("model {0} is not registered")]
    NotFound(ModelId),
    #[error("no prior result for model {model} in session {session}")]
    NoPriorResult { session: SessionId, model: ModelId },
}

/// Text actually sent to a backend.
#[derive(Debug, Clone, PartialEq)]
pub struct UpstreamPrompt {
    pub text: String,
    pub temperature: f64,
}

#[async_trait]
pub trait Provider: Send + Sync {
    async fn stream(&self, prompt: &UpstreamPrompt) -> Result<ChunkStream, ProviderError>;
}

/// A cited prior result used as context.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CitedContext {
    pub model: ModelId,
    pub content: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenerationRequest {
    pub prompt: String,
    pub context: Vec<CitedContext>,
    pub session: SessionId,
    /// Turn within the session; results are grouped per (session, turn, model).
    pub turn: u64,
    pub temperature: f64,
}

impl GenerationRequest {
    pub fn new(prompt: impl Into<String>, session: impl Into<SessionId>) -> Self {
        Self {
            prompt: prompt.into(),
            context: Vec::new(),
            session: session.into(),
            turn: 0,
            temperature: 0.7,
        }
    }

    pub fn with_context(mut self, context: Vec<CitedContext>) -> Self {
        self.context = context;
        self
    }

    pub fn with_turn(mut self, turn: u64) -> Self {
        self.turn = turn;
        self
    }

    /// Cited results become fenced blocks ahead of the user prompt.
    pub fn upstream_text(&self) -> String {
        let mut out = String::new();
        for cited in &self.context {
            out.push_str(&format!(
                "-- cited from {} --\n```\n{}\n```\n\n",
                cited.model, cited.content
            ));
        }
        out.push_str(&self.prompt);
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum GenerationEvent {
    Chunk { model: ModelId, text: String },
    Finished(ProviderResult),
}

pub type GenerationStream = BoxStream<'static, GenerationEvent>;

struct Entry {
    config: ProviderConfig,
    provider: Arc<dyn Provider>,
}

type HistoryKey = (SessionId, u64, ModelId);

#[derive(Default)]
struct History {
    next_index: HashMap<HistoryKey, u32>,
    results: HashMap<HistoryKey, Vec<ProviderResult>>,
}

/// Registry of providers in registration order.
#[derive(Default)]
pub struct Gateway {
    entries: RwLock<Vec<(ModelId, Arc<Entry>)>>,
    history: Arc<Mutex<History>>,
}

fn now_ms() -> i64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis() as i64)
        .unwrap_or(0)
}

impl Gateway {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds providers for every entry of a provider file.
    pub fn from_file(file: &ProvidersFile) -> Result<Self, GatewayError> {
        let gateway = Self::new();
        for config in &file.providers {
            gateway.register(config.clone())?;
        }
        Ok(gateway)
    }

    pub fn register(&self, config: ProviderConfig) -> Result<(), GatewayError> {
        let provider: Arc<dyn Provider> = match config.kind {
            ProviderKind::Mock => Arc::new(MockProvider::new(config.mock.clone().unwrap_or_default())),
            ProviderKind::OpenaiCompatible => Arc::new(OpenAiCompatible::new(
                config.endpoint.clone().unwrap_or_default(),
                config
                    .upstream_model
                    .clone()
                    .unwrap_or_else(|| config.model.to_string()),
                config.auth_env.clone(),
            )),
        };
        self.register_provider(config, provider)
    }

    /// Registers a provider instance, e.g. a `MockProvider` whose capture hook
    /// the caller keeps.
    pub fn register_provider(
        &self,
        config: ProviderConfig,
        provider: Arc<dyn Provider>,
    ) -> Result<(), GatewayError> {
        let mut entries = self.entries.write().unwrap();
        if entries.iter().any(|(id, _)| *id == config.model) {
            return Err(GatewayError::DuplicateModel(config.model));
        }
        let id = config.model.clone();
        entries.push((id, Arc::new(Entry { config, provider })));
        Ok(())
    }

    pub fn models(&self) -> Vec<ModelId> {
        self.entries.read().unwrap().iter().map(|(id, _)| id.clone()).collect()
    }

    pub fn contains(&self, model: &ModelId) -> bool {
        self.entries.read().unwrap().iter().any(|(id, _)| id == model)
    }

    fn entry(&self, model: &ModelId) -> Result<Arc<Entry>, GatewayError> {
        self.entries
            .read()
            .unwrap()
            .iter()
            .find(|(id, _)| id == model)
            .map(|(_, e)| e.clone())
            .ok_or_else(|| GatewayError::NotFound(model.clone()))
    }

    /// Streams one generation. The stream yields text chunks and always ends
    /// with exactly one `Finished` event whose content is the chunk concatenation.
    pub fn generate(
        &self,
        model: &ModelId,
        req: &GenerationRequest,
    ) -> Result<GenerationStream, GatewayError> {
        let entry = self.entry(model)?;
        let key = (req.session.clone(), req.turn, model.clone());
        let index = {
            let mut h = self.history.lock().unwrap();
            let next = h.next_index.entry(key.clone()).or_insert(0);
            let index = *next;
            *next += 1;
            index
        };
        Ok(self.run(entry, key, index, req))
    }

    fn run(
        &self,
        entry: Arc<Entry>,
        key: HistoryKey,
        index: u32,
        req: &GenerationRequest,
    ) -> GenerationStream {
        let prompt = UpstreamPrompt {
            text: req.upstream_text(),
            temperature: req.temperature,
        };
        let timeout = Duration::from_secs_f64(entry.config.timeout_s);
        let history = self.history.clone();
        let model = key.2.clone();

        enum Phase {
            Start,
            Streaming(ChunkStream),
            Done,
        }
        struct St {
            phase: Phase,
            content: String,
            started: tokio::time::Instant,
            deadline: tokio::time::Instant,
        }
        let started = tokio::time::Instant::now();
        let st = St {
            phase: Phase::Start,
            content: String::new(),
            started,
            deadline: started + timeout,
        };

        let finish = move |st: &mut St, outcome: Result<(), ProviderError>| {
            st.phase = Phase::Done;
            let latency = st.started.elapsed().as_millis() as u64;
            let result = match outcome {
                Ok(()) => ProviderResult::complete(model.clone(), std::mem::take(&mut st.content), now_ms(), latency),
                Err(e) => ProviderResult::failed(model.clone(), e.to_string(), now_ms(), latency),
            }
            .with_generation_index(index);
            let mut h = history.lock().unwrap();
            let list = h.results.entry(key.clone()).or_default();
            list.push(result.clone());
            list.sort_by_key(|r| r.generation_index);
            GenerationEvent::Finished(result)
        };

        let out = stream::unfold((st, entry, prompt, finish), move |(mut st, entry, prompt, finish)| async move {
            loop {
                match std::mem::replace(&mut st.phase, Phase::Done) {
                    Phase::Done => return None,
                    Phase::Start => {
                        match tokio::time::timeout_at(st.deadline, entry.provider.stream(&prompt)).await {
                            Ok(Ok(s)) => st.phase = Phase::Streaming(s),
                            Ok(Err(e)) => {
                                let ev = finish(&mut st, Err(e));
                                return Some((ev, (st, entry, prompt, finish)));
                            }
                            Err(_) => {
                                let ev = finish(&mut st, Err(ProviderError::Timeout(timeout)));
                                return Some((ev, (st, entry, prompt, finish)));
                            }
                        }
                    }
                    Phase::Streaming(mut s) => {
                        let next = tokio::time::timeout_at(st.deadline, s.next()).await;
                        let ev = match next {
                            Ok(Some(Ok(text))) => {
                                st.content.push_str(&text);
                                st.phase = Phase::Streaming(s);
                                GenerationEvent::Chunk {
                                    model: entry.config.model.clone(),
                                    text,
                                }
                            }
                            Ok(Some(Err(e))) => finish(&mut st, Err(e)),
                            Ok(None) => finish(&mut st, Ok(())),
                            Err(_) => finish(&mut st, Err(ProviderError::Timeout(timeout))),
                        };
                        return Some((ev, (st, entry, prompt, finish)));
                    }
                }
            }
        });
        out.boxed()
    }

    /// Runs a generation to completion.
    pub async fn complete(
        &self,
        model: &ModelId,
        req: &GenerationRequest,
    ) -> Result<ProviderResult, GatewayError> {
        let stream = self.generate(model, req)?;
        Ok(drain(stream).await)
    }

    /// Runs all generations concurrently and waits for every one to finish.
    pub async fn fan_out(
        &self,
        models: &[ModelId],
        req: &GenerationRequest,
    ) -> Result<BTreeMap<ModelId, ProviderResult>, GatewayError> {
        let streams = models
            .iter()
            .map(|m| self.generate(m, req))
            .collect::<Result<Vec<_>, _>>()?;
        let results = futures::future::join_all(streams.into_iter().map(drain)).await;
        Ok(results.into_iter().map(|r| (r.model.clone(), r)).collect())
    }

    /// Re-runs a model for a (session, turn) that already has a result.
    pub fn regenerate_stream(
        &self,
        model: &ModelId,
        req: &GenerationRequest,
    ) -> Result<GenerationStream, GatewayError> {
        self.entry(model)?;
        let key = (req.session.clone(), req.turn, model.clone());
        let has_prior = self
            .history
            .lock()
            .unwrap()
            .next_index
            .get(&key)
            .is_some_and(|n| *n > 0);
        if !has_prior {
            return Err(GatewayError::NoPriorResult {
                session: req.session.clone(),
                model: model.clone(),
            });
        }
        self.generate(model, req)
    }

    pub async fn regenerate(
        &self,
        model: &ModelId,
        req: &GenerationRequest,
    ) -> Result<ProviderResult, GatewayError> {
        Ok(drain(self.regenerate_stream(model, req)?).await)
    }

    /// Every finished generation for (session, turn, model), oldest first.
    pub fn history(&self, session: &SessionId, turn: u64, model: &ModelId) -> Vec<ProviderResult> {
        self.history
            .lock()
            .unwrap()
            .results
            .get(&(session.clone(), turn, model.clone()))
            .cloned()
            .unwrap_or_default()
    }

    /// Seeds history from persisted results so regeneration continues the
    /// generation count.
    pub fn restore_history(
        &self,
        session: &SessionId,
        turn: u64,
        model: &ModelId,
        results: Vec<ProviderResult>,
    ) {
        let key = (session.clone(), turn, model.clone());
        let mut h = self.history.lock().unwrap();
        let next = results.iter().map(|r| r.generation_index + 1).max().unwrap_or(0);
        let slot = h.next_index.entry(key.clone()).or_insert(0);
        *slot = (*slot).max(next);
        h.results.insert(key, results);
    }
}

/// Consumes a generation stream and returns its final result.
pub async fn drain(mut stream: GenerationStream) -> ProviderResult {
    while let Some(ev) = stream.next().await {
        if let GenerationEvent::Finished(result) = ev {
            return result;
        }
    }
    unreachable!("generation streams always finish with a result")
}
