//! Orchestration shared by the HTTP service and the CLI: sessions, query
//! turns with streamed generations, fusion jobs, document edits, feedback.

use std::collections::BTreeMap;
use std::pin::Pin;
use std::sync::Arc;
use std::task::Poll;

use futures::stream::{self, BoxStream};
use futures::{Stream, StreamExt};
use serde::{Deserialize, Serialize};

use crate::classifier::{Classifier, ClassifyError, EngineTag, LlmClassifier};
use crate::config::{AppConfig, ClassifierEngine};
use crate::dispatch::{self, DispatchError, DispatchPlan};
use crate::document::{export, DocError, DocOp};
use crate::domain::{DocumentId, FusionDocument, ModelId, ProviderResult, SessionId, TaskLabel, TurnId};
use crate::fusion::{rank_models, CriteriaSet, FusionEngine, FusionError, FusionOutcome, PromptSet};
use crate::gateway::{CitedContext, Gateway, GatewayError, GenerationEvent, GenerationRequest, GenerationStream, ProvidersFile};
use crate::store::{FeedbackInput, FeedbackRecord, HistoryEntry, NewTurn, PerformanceTable, Store, StoreError, TurnRecord};
use crate::taxonomy::Taxonomy;

const CLASSIFIER_TEMPLATE: &str = include_str!("../assets/prompts/classifier.txt");

#[derive(Debug, thiserror::Error)]
pub enum AppError {
    #[error("{0}")]
    BadRequest(String),
    #[error("{0}")]
    NotFound(String),
    #[error("{0}")]
    Conflict(String),
    #[error("{0}")]
    Internal(String),
}

impl AppError {
    /// HTTP status for the error.
    pub fn status(&self) -> u16 {
        match self {
            AppError::BadRequest(_) => 400,
            AppError::NotFound(_) => 404,
            AppError::Conflict(_) => 409,
            AppError::Internal(_) => 500,
        }
    }
}

impl From<StoreError> for AppError {
    fn from(e: StoreError) -> Self {
        let msg = e.to_string();
        match e {
            StoreError::UnknownSession(_)
            | StoreError::UnknownTurn(_)
            | StoreError::UnknownModel { .. }
            | StoreError::UnknownDocument(_) => AppError::NotFound(msg),
            StoreError::CommentTooShort | StoreError::BadFeedback(_) => AppError::BadRequest(msg),
            StoreError::AlreadyStarted { .. } => AppError::Conflict(msg),
            StoreError::Document(d) => d.into(),
            StoreError::Io(_) | StoreError::Corrupt(_) => AppError::Internal(msg),
        }
    }
}

impl From<DocError> for AppError {
    fn from(e: DocError) -> Self {
        let msg = e.to_string();
        match e {
            DocError::UnknownUnit(_) => AppError::NotFound(msg),
            DocError::SingleVariant(_) => AppError::Conflict(msg),
            DocError::EmptyText | DocError::BadPayload { .. } => AppError::BadRequest(msg),
        }
    }
}

impl From<FusionError> for AppError {
    fn from(e: FusionError) -> Self {
        let msg = e.to_string();
        match e {
            FusionError::TooFewResults(_) | FusionError::MissingResult(_) | FusionError::EmptyContent(_) => {
                AppError::Conflict(msg)
            }
            FusionError::Integrate(_) | FusionError::Config(_) => AppError::Internal(msg),
        }
    }
}

impl From<GatewayError> for AppError {
    fn from(e: GatewayError) -> Self {
        let msg = e.to_string();
        match e {
            GatewayError::NotFound(_) => AppError::NotFound(msg),
            GatewayError::NoPriorResult { .. } => AppError::Conflict(msg),
            GatewayError::DuplicateModel(_) => AppError::Internal(msg),
        }
    }
}

/// A prior result used as context; `turn` defaults to the session's latest turn.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CiteRef {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub turn: Option<TurnId>,
    pub model: ModelId,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QueryInput {
    pub prompt: String,
    #[serde(default)]
    pub pins: Vec<ModelId>,
    #[serde(default)]
    pub cite: Vec<CiteRef>,
}

/// Events of a query turn, in emission order: `task_label`, `dispatch_plan`,
/// then interleaved `chunk`/`result` events, then `done`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", content = "data", rename_all = "snake_case")]
pub enum QueryEvent {
    TaskLabel {
        turn: TurnId,
        label: TaskLabel,
        confidence: f64,
        engine: EngineTag,
    },
    DispatchPlan {
        turn: TurnId,
        plan: DispatchPlan,
    },
    Chunk {
        model: ModelId,
        text: String,
    },
    Result {
        result: ProviderResult,
    },
    Done {
        turn: TurnId,
    },
}

impl QueryEvent {
    pub fn name(&self) -> &'static str {
        match self {
            QueryEvent::TaskLabel { .. } => "task_label",
            QueryEvent::DispatchPlan { .. } => "dispatch_plan",
            QueryEvent::Chunk { .. } => "chunk",
            QueryEvent::Result { .. } => "result",
            QueryEvent::Done { .. } => "done",
        }
    }

    /// JSON payload without the event name.
    pub fn data_json(&self) -> String {
        let mut value = serde_json::to_value(self).expect("events serialize");
        value["data"].take().to_string()
    }
}

pub type EventStream = BoxStream<'static, QueryEvent>;

/// Round-robin merge in list order: each poll starts after the stream that
/// produced the previous item, so earlier streams win ties.
fn merge_in_order(mut streams: Vec<GenerationStream>) -> impl Stream<Item = GenerationEvent> + Send {
    let mut next = 0usize;
    stream::poll_fn(move |cx| {
        let mut tried = 0;
        while !streams.is_empty() && tried < streams.len() {
            let i = next % streams.len();
            match Pin::new(&mut streams[i]).poll_next(cx) {
                Poll::Ready(Some(ev)) => {
                    next = i + 1;
                    return Poll::Ready(Some(ev));
                }
                Poll::Ready(None) => {
                    drop(streams.remove(i));
                    next = i;
                }
                Poll::Pending => {
                    next = i + 1;
                    tried += 1;
                }
            }
        }
        if streams.is_empty() {
            Poll::Ready(None)
        } else {
            Poll::Pending
        }
    })
}

pub struct App {
    gateway: Arc<Gateway>,
    store: Arc<Store>,
    classifier: Arc<Classifier>,
    fusion: Arc<FusionEngine>,
}

impl App {
    /// Assembles an app; generation counts are restored from stored turns.
    pub fn new(gateway: Arc<Gateway>, store: Arc<Store>, classifier: Arc<Classifier>, fusion: Arc<FusionEngine>) -> Self {
        for turn in store.state().turns.values() {
            for (model, results) in &turn.results {
                gateway.restore_history(&turn.session, turn.seq, model, results.clone());
            }
        }
        Self { gateway, store, classifier, fusion }
    }

    /// In-memory app with keyword classification and deterministic fusion.
    pub fn with_gateway(gateway: Arc<Gateway>) -> Self {
        let taxonomy = Arc::new(Taxonomy::builtin().clone());
        Self::new(
            gateway,
            Arc::new(Store::in_memory()),
            Arc::new(Classifier::fallback(taxonomy.clone())),
            Arc::new(FusionEngine::deterministic(taxonomy)),
        )
    }

    pub fn from_config(config: &AppConfig) -> Result<Self, AppError> {
        let internal = |e: &dyn std::fmt::Display| AppError::Internal(e.to_string());
        let taxonomy = Arc::new(match &config.taxonomy {
            Some(p) => Taxonomy::load(p).map_err(|e| internal(&e))?,
            None => Taxonomy::builtin().clone(),
        });
        let criteria = match &config.criteria {
            Some(p) => CriteriaSet::load(p).map_err(|e| internal(&e))?,
            None => CriteriaSet::builtin().clone(),
        };
        criteria.check(&taxonomy).map_err(|e| internal(&e))?;
        let prompts = match &config.prompts_dir {
            Some(dir) => PromptSet::load_dir(dir).map_err(|e| internal(&e))?,
            None => PromptSet::default(),
        };

        let gateway = Arc::new(Gateway::new());
        let mut providers = config.providers.clone();
        if let Some(path) = &config.providers_file {
            providers.extend(ProvidersFile::load(path).map_err(|e| internal(&e))?.providers);
        }
        for p in providers {
            p.check().map_err(|e| internal(&e))?;
            gateway.register(p).map_err(|e| internal(&e))?;
        }

        let mut store = match &config.store_dir {
            Some(dir) => Store::open(dir)?,
            None => Store::in_memory(),
        };
        if let Some(seed) = &config.seed_table {
            store = store.with_seed(PerformanceTable::load_seed(seed).map_err(|e| internal(&e))?);
        }
        if let Some(n) = config.snapshot_every {
            store = store.with_snapshot_every(n);
        }

        let classifier = match config.classifier.engine {
            ClassifierEngine::Fallback => Classifier::fallback(taxonomy.clone()),
            ClassifierEngine::Llm => {
                let model = config
                    .classifier
                    .model
                    .clone()
                    .ok_or_else(|| AppError::Internal("classifier.model is required for the llm engine".into()))?;
                if !gateway.contains(&model) {
                    return Err(AppError::Internal(format!("classifier model {model} is not registered")));
                }
                let template = match &config.classifier.template {
                    Some(p) => std::fs::read_to_string(p).map_err(|e| internal(&e))?,
                    None => CLASSIFIER_TEMPLATE.to_owned(),
                };
                Classifier::with_llm(taxonomy.clone(), LlmClassifier { gateway: gateway.clone(), model, template })
            }
        };
        let fusion = FusionEngine::new(
            config.fusion.clone(),
            taxonomy,
            Arc::new(criteria),
            Arc::new(prompts),
            Some(gateway.clone()),
        )?;
        Ok(Self::new(gateway, Arc::new(store), Arc::new(classifier), Arc::new(fusion)))
    }

    pub fn gateway(&self) -> &Arc<Gateway> {
        &self.gateway
    }

    pub fn store(&self) -> &Arc<Store> {
        &self.store
    }

    pub fn create_session(&self) -> Result<SessionId, AppError> {
        Ok(self.store.create_session()?)
    }

    pub fn history(&self, session: &SessionId) -> Result<Vec<HistoryEntry>, AppError> {
        Ok(self.store.history(session)?)
    }

    pub fn turn(&self, turn: &TurnId) -> Result<TurnRecord, AppError> {
        Ok(self.store.turn(turn)?)
    }

    fn resolve_context(&self, prior: &[TurnRecord], cite: &[CiteRef]) -> Result<Vec<CitedContext>, AppError> {
        if cite.is_empty() {
            return Ok(prior
                .last()
                .and_then(TurnRecord::first_complete)
                .map(|r| CitedContext { model: r.model.clone(), content: r.content.clone() })
                .into_iter()
                .collect());
        }
        cite.iter()
            .map(|c| {
                let turn = match &c.turn {
                    Some(id) => prior.iter().find(|t| &t.id == id),
                    None => prior.last(),
                };
                let result = turn.and_then(|t| t.latest_complete(&c.model)).ok_or_else(|| {
                    let at = c.turn.as_ref().map_or("the previous turn".to_owned(), |t| format!("turn {t}"));
                    AppError::Conflict(format!("no complete result from {} in {at} to cite", c.model))
                })?;
                Ok(CitedContext { model: c.model.clone(), content: result.content.clone() })
            })
            .collect()
    }

    /// Classifies, plans and records a new turn, then auto-runs the plan prefix.
    pub async fn submit_query(&self, session: &SessionId, input: QueryInput) -> Result<(TurnRecord, EventStream), AppError> {
        if input.prompt.trim().is_empty() {
            return Err(AppError::BadRequest("prompt must not be empty".into()));
        }
        let prior = self.store.turns(session)?;
        let context = self.resolve_context(&prior, &input.cite)?;
        let earlier: Vec<String> = prior.iter().map(|t| t.prompt.clone()).collect();
        let classification = self
            .classifier
            .classify(&input.prompt, &earlier, session)
            .await
            .map_err(|e: ClassifyError| AppError::BadRequest(e.to_string()))?;
        let plan = dispatch::plan(
            classification.label,
            &input.pins,
            &self.store.performance_table(),
            &self.gateway.models(),
        )
        .map_err(|e: DispatchError| AppError::BadRequest(e.to_string()))?;
        let turn = self.store.begin_turn(
            session,
            NewTurn { prompt: input.prompt, classification, plan, context },
        )?;

        let auto = turn.plan.auto_run().to_vec();
        for model in &auto {
            self.store.mark_started(&turn.id, model)?;
        }
        let run = self.run_models(&turn, &auto)?;
        let head = [
            QueryEvent::TaskLabel {
                turn: turn.id.clone(),
                label: turn.label,
                confidence: turn.confidence,
                engine: turn.engine,
            },
            QueryEvent::DispatchPlan { turn: turn.id.clone(), plan: turn.plan.clone() },
        ];
        let done = QueryEvent::Done { turn: turn.id.clone() };
        let events = stream::iter(head).chain(run).chain(stream::once(async move { done }));
        Ok((turn, events.boxed()))
    }

    fn request_for(turn: &TurnRecord) -> GenerationRequest {
        GenerationRequest::new(turn.prompt.clone(), turn.session.clone())
            .with_context(turn.context.clone())
            .with_turn(turn.seq)
    }

    /// Starts generations and records each result as it finishes. The work
    /// runs on its own task, so dropping the returned stream loses nothing.
    fn run_models(&self, turn: &TurnRecord, models: &[ModelId]) -> Result<EventStream, AppError> {
        let req = Self::request_for(turn);
        let streams = models
            .iter()
            .map(|m| self.gateway.generate(m, &req))
            .collect::<Result<Vec<_>, _>>()?;
        let (tx, rx) = tokio::sync::mpsc::unbounded_channel();
        let store = self.store.clone();
        let turn_id = turn.id.clone();
        tokio::spawn(async move {
            let mut merged = std::pin::pin!(merge_in_order(streams));
            while let Some(ev) = merged.next().await {
                let out = match ev {
                    GenerationEvent::Chunk { model, text } => QueryEvent::Chunk { model, text },
                    GenerationEvent::Finished(result) => {
                        if let Err(e) = store.record_result(&turn_id, result.clone()) {
                            tracing::error!(turn = %turn_id, model = %result.model, "recording result failed: {e}");
                        }
                        QueryEvent::Result { result }
                    }
                };
                let _ = tx.send(out);
            }
        });
        Ok(stream::unfold(rx, |mut rx| async move { rx.recv().await.map(|e| (e, rx)) }).boxed())
    }

    /// Runs a planned model that was not auto-run.
    pub fn manual_trigger(&self, turn: &TurnId, model: &ModelId) -> Result<EventStream, AppError> {
        let record = self.store.turn(turn)?;
        self.store.mark_started(turn, model)?;
        self.run_models(&record, std::slice::from_ref(model))
    }

    /// Generates a fresh result for a model that already answered this turn.
    pub fn regenerate(&self, turn: &TurnId, model: &ModelId) -> Result<EventStream, AppError> {
        let record = self.store.turn(turn)?;
        if record.plan.position(model).is_none() {
            return Err(StoreError::UnknownModel { turn: turn.clone(), model: model.clone() }.into());
        }
        if record.latest(model).is_none() {
            return Err(AppError::Conflict(format!("model {model} has no result to regenerate in turn {turn}")));
        }
        self.run_models(&record, std::slice::from_ref(model))
    }

    /// Fuses the latest complete results of `models` (all complete results
    /// when empty) and stores the document on the turn.
    pub async fn fuse(&self, turn: &TurnId, models: &[ModelId]) -> Result<(DocumentId, FusionOutcome), AppError> {
        let record = self.store.turn(turn)?;
        let mut selection: Vec<ModelId> = Vec::new();
        if models.is_empty() {
            selection.extend(record.plan.models.iter().filter(|m| record.latest_complete(m).is_some()).cloned());
        } else {
            for m in models {
                if record.plan.position(m).is_none() {
                    return Err(StoreError::UnknownModel { turn: turn.clone(), model: m.clone() }.into());
                }
                if !selection.contains(m) {
                    selection.push(m.clone());
                }
            }
        }
        let results: Vec<ProviderResult> = selection
            .iter()
            .filter_map(|m| record.latest_complete(m).cloned())
            .collect();
        let rank = rank_models(&self.store.performance_table(), record.label, &selection, self.fusion.config());
        let outcome = self.fusion.fuse(&results, record.label, &selection, &rank).await?;
        let id = self.store.store_document(turn, outcome.document.clone())?;
        Ok((id, outcome))
    }

    pub fn document(&self, id: &DocumentId) -> Result<FusionDocument, AppError> {
        Ok(self.store.document(id)?.document)
    }

    pub fn apply_op(&self, id: &DocumentId, op: DocOp) -> Result<FusionDocument, AppError> {
        Ok(self.store.apply_document_op(id, op)?)
    }

    pub fn export(&self, id: &DocumentId) -> Result<String, AppError> {
        Ok(export(&self.document(id)?))
    }

    pub fn feedback(&self, turn: &TurnId, input: FeedbackInput) -> Result<FeedbackRecord, AppError> {
        Ok(self.store.record_feedback(turn, input)?)
    }

    /// Likes and dislikes per (major, model), seed included.
    pub fn performance_table(&self) -> PerformanceTable {
        self.store.performance_table()
    }

    /// Latest result per model for a turn.
    pub fn latest_results(&self, turn: &TurnId) -> Result<BTreeMap<ModelId, ProviderResult>, AppError> {
        let record = self.store.turn(turn)?;
        Ok(record
            .results
            .iter()
            .filter_map(|(m, r)| r.last().map(|r| (m.clone(), r.clone())))
            .collect())
    }
}
