//! Sessions, turns, results, feedback and fusion documents, persisted as an
//! append-only event log with periodic snapshots and served from an
//! in-memory projection.

mod log;
mod records;
mod table;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::{Arc, RwLock};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

pub use log::{Event, LogLine, ReadError};
pub use records::{
    DocumentRecord, FeedbackKind, FeedbackRecord, HistoryEntry, SessionRecord, StoredDocument,
    TurnRecord, MIN_COMMENT_CHARS,
};
pub use table::{raw_score, Counts, PerformanceTable, Score, SeedError, TableRow};

use crate::classifier::Classification;
use crate::dispatch::DispatchPlan;
use crate::document::{apply_op, DocError, DocOp};
use crate::domain::{DocumentId, FusionDocument, ModelId, ProviderResult, SessionId, TurnId};
use crate::gateway::CitedContext;
use log::LogWriter;

pub const EVENTS_FILE: &str = "events.jsonl";
pub const SNAPSHOT_FILE: &str = "snapshot.json";
const DEFAULT_SNAPSHOT_EVERY: u64 = 100;

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("unknown session {0}")]
    UnknownSession(SessionId),
    #[error("unknown turn {0}")]
    UnknownTurn(TurnId),
    #[error("model {model} is not part of turn {turn}")]
    UnknownModel { turn: TurnId, model: ModelId },
    #[error("unknown document {0}")]
    UnknownDocument(DocumentId),
    #[error("comment must be at least {MIN_COMMENT_CHARS} characters")]
    CommentTooShort,
    #[error("invalid feedback: {0}")]
    BadFeedback(String),
    #[error("model {model} already ran for turn {turn}")]
    AlreadyStarted { turn: TurnId, model: ModelId },
    #[error(transparent)]
    Document(#[from] DocError),
    #[error("store i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("store data: {0}")]
    Corrupt(String),
}

impl From<ReadError> for StoreError {
    fn from(e: ReadError) -> Self {
        match e {
            ReadError::Io(e) => StoreError::Io(e),
            other => StoreError::Corrupt(other.to_string()),
        }
    }
}

/// Full projected state; also the snapshot payload.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StoreState {
    pub next_session: u64,
    pub next_turn: u64,
    pub next_document: u64,
    pub sessions: BTreeMap<SessionId, SessionRecord>,
    pub turns: BTreeMap<TurnId, TurnRecord>,
    pub documents: BTreeMap<DocumentId, DocumentRecord>,
}

#[derive(Serialize, Deserialize)]
struct Snapshot {
    /// Number of log lines folded into `state`.
    applied: u64,
    state: StoreState,
}

impl StoreState {
    fn apply(&mut self, event: &Event) -> Result<(), StoreError> {
        match event {
            Event::SessionCreated { id, created_at } => {
                self.next_session += 1;
                self.sessions.insert(
                    id.clone(),
                    SessionRecord {
                        id: id.clone(),
                        created_at: *created_at,
                        turns: Vec::new(),
                    },
                );
            }
            Event::TurnStarted(turn) => {
                let session = self
                    .sessions
                    .get_mut(&turn.session)
                    .ok_or_else(|| StoreError::UnknownSession(turn.session.clone()))?;
                session.turns.push(turn.id.clone());
                self.next_turn = self.next_turn.max(turn.seq + 1);
                self.turns.insert(turn.id.clone(), (**turn).clone());
            }
            Event::GenerationStarted { turn, model } => {
                let t = self.turn_mut(turn)?;
                if !t.started.contains(model) {
                    t.started.push(model.clone());
                }
            }
            Event::ResultRecorded { turn, result } => {
                let t = self.turn_mut(turn)?;
                let list = t.results.entry(result.model.clone()).or_default();
                list.push(result.clone());
                list.sort_by_key(|r| r.generation_index);
            }
            Event::FeedbackRecorded(rec) => {
                let t = self.turn_mut(&rec.turn)?;
                match rec.kind {
                    FeedbackKind::Comment => t.comments.push(rec.clone()),
                    kind => {
                        t.ratings.insert(rec.model.clone(), kind);
                    }
                }
            }
            Event::DocumentStored { id, turn, document } => {
                self.turn_mut(turn)?.documents.push(id.clone());
                self.next_document += 1;
                self.documents.insert(
                    id.clone(),
                    DocumentRecord {
                        id: id.clone(),
                        turn: turn.clone(),
                        original: document.clone(),
                        ops: Vec::new(),
                        document: document.clone(),
                    },
                );
            }
            Event::DocumentOp { id, op } => {
                let rec = self
                    .documents
                    .get_mut(id)
                    .ok_or_else(|| StoreError::UnknownDocument(id.clone()))?;
                rec.document = apply_op(&rec.document, op)?;
                rec.ops.push(op.clone());
            }
        }
        Ok(())
    }

    fn turn_mut(&mut self, id: &TurnId) -> Result<&mut TurnRecord, StoreError> {
        self.turns
            .get_mut(id)
            .ok_or_else(|| StoreError::UnknownTurn(id.clone()))
    }

    fn turn(&self, id: &TurnId) -> Result<&TurnRecord, StoreError> {
        self.turns
            .get(id)
            .ok_or_else(|| StoreError::UnknownTurn(id.clone()))
    }
}

type Clock = Arc<dyn Fn() -> i64 + Send + Sync>;

struct Inner {
    state: StoreState,
    log: Option<LogWriter>,
    dir: Option<PathBuf>,
    applied: u64,
    since_snapshot: u64,
}

pub struct Store {
    inner: RwLock<Inner>,
    seed: PerformanceTable,
    clock: Clock,
    snapshot_every: u64,
}

fn system_ms() -> i64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis() as i64)
        .unwrap_or(0)
}

/// New turn contents supplied by the caller.
#[derive(Debug, Clone)]
pub struct NewTurn {
    pub prompt: String,
    pub classification: Classification,
    pub plan: DispatchPlan,
    pub context: Vec<CitedContext>,
}

/// Feedback as submitted, before the store fills in session and timestamp.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeedbackInput {
    pub model: ModelId,
    pub kind: FeedbackKind,
    #[serde(default)]
    pub text: Option<String>,
}

impl Store {
    pub fn in_memory() -> Self {
        Self {
            inner: RwLock::new(Inner {
                state: StoreState::default(),
                log: None,
                dir: None,
                applied: 0,
                since_snapshot: 0,
            }),
            seed: PerformanceTable::default(),
            clock: Arc::new(system_ms),
            snapshot_every: DEFAULT_SNAPSHOT_EVERY,
        }
    }

    /// Opens (or creates) a store directory, replaying the snapshot and log.
    pub fn open(dir: &Path) -> Result<Self, StoreError> {
        std::fs::create_dir_all(dir)?;
        let (mut state, applied) = match std::fs::read(dir.join(SNAPSHOT_FILE)) {
            Ok(bytes) => {
                let snap: Snapshot = serde_json::from_slice(&bytes)
                    .map_err(|e| StoreError::Corrupt(format!("snapshot: {e}")))?;
                (snap.state, snap.applied)
            }
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => (StoreState::default(), 0),
            Err(e) => return Err(e.into()),
        };
        let lines = log::read_all(&dir.join(EVENTS_FILE))?;
        let total = lines.len() as u64;
        if total < applied {
            return Err(StoreError::Corrupt(format!(
                "snapshot covers {applied} events but log has {total}"
            )));
        }
        for line in lines.iter().skip(applied as usize) {
            state.apply(&line.event)?;
        }
        Ok(Self {
            inner: RwLock::new(Inner {
                state,
                log: Some(LogWriter::open(&dir.join(EVENTS_FILE))?),
                dir: Some(dir.to_owned()),
                applied: total,
                since_snapshot: total - applied,
            }),
            seed: PerformanceTable::default(),
            clock: Arc::new(system_ms),
            snapshot_every: DEFAULT_SNAPSHOT_EVERY,
        })
    }

    pub fn with_seed(mut self, seed: PerformanceTable) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_clock(mut self, clock: impl Fn() -> i64 + Send + Sync + 'static) -> Self {
        self.clock = Arc::new(clock);
        self
    }

    pub fn with_snapshot_every(mut self, events: u64) -> Self {
        self.snapshot_every = events.max(1);
        self
    }

    fn now(&self) -> i64 {
        (self.clock)()
    }

    /// Validates against current state, logs, then applies. Single writer.
    fn write<T>(
        &self,
        build: impl FnOnce(&StoreState, i64) -> Result<(Event, T), StoreError>,
    ) -> Result<T, StoreError> {
        let mut inner = self.inner.write().unwrap();
        let ts = self.now();
        let (event, out) = build(&inner.state, ts)?;
        let line = LogLine { ts, event };
        if let Some(log) = inner.log.as_mut() {
            log.append(&line)?;
        }
        inner.state.apply(&line.event)?;
        inner.applied += 1;
        inner.since_snapshot += 1;
        if inner.since_snapshot >= self.snapshot_every {
            Self::write_snapshot(&mut inner)?;
        }
        Ok(out)
    }

    fn write_snapshot(inner: &mut Inner) -> Result<(), StoreError> {
        let Some(dir) = inner.dir.clone() else {
            return Ok(());
        };
        let snap = Snapshot {
            applied: inner.applied,
            state: inner.state.clone(),
        };
        let bytes = serde_json::to_vec(&snap).map_err(|e| StoreError::Corrupt(e.to_string()))?;
        let tmp = dir.join(format!("{SNAPSHOT_FILE}.tmp"));
        std::fs::write(&tmp, bytes)?;
        std::fs::rename(&tmp, dir.join(SNAPSHOT_FILE))?;
        inner.since_snapshot = 0;
        Ok(())
    }

    pub fn snapshot(&self) -> Result<(), StoreError> {
        Self::write_snapshot(&mut self.inner.write().unwrap())
    }

    /// Full projected state in canonical JSON.
    pub fn state_bytes(&self) -> Vec<u8> {
        serde_json::to_vec(&self.inner.read().unwrap().state).expect("state serializes")
    }

    pub fn state(&self) -> StoreState {
        self.inner.read().unwrap().state.clone()
    }

    fn read<T>(&self, f: impl FnOnce(&StoreState) -> T) -> T {
        f(&self.inner.read().unwrap().state)
    }

    pub fn create_session(&self) -> Result<SessionId, StoreError> {
        self.write(|state, ts| {
            let id = SessionId(format!("s{}", state.next_session + 1));
            Ok((
                Event::SessionCreated {
                    id: id.clone(),
                    created_at: ts,
                },
                id,
            ))
        })
    }

    pub fn has_session(&self, id: &SessionId) -> bool {
        self.read(|s| s.sessions.contains_key(id))
    }

    pub fn begin_turn(&self, session: &SessionId, turn: NewTurn) -> Result<TurnRecord, StoreError> {
        self.write(|state, ts| {
            if !state.sessions.contains_key(session) {
                return Err(StoreError::UnknownSession(session.clone()));
            }
            let seq = state.next_turn + 1;
            let record = TurnRecord {
                id: TurnId(format!("t{seq}")),
                session: session.clone(),
                seq,
                prompt: turn.prompt,
                label: turn.classification.label,
                confidence: turn.classification.confidence,
                engine: turn.classification.engine,
                plan: turn.plan,
                context: turn.context,
                created_at: ts,
                started: Vec::new(),
                results: BTreeMap::new(),
                ratings: BTreeMap::new(),
                comments: Vec::new(),
                documents: Vec::new(),
            };
            Ok((Event::TurnStarted(Box::new(record.clone())), record))
        })
    }

    pub fn turn(&self, id: &TurnId) -> Result<TurnRecord, StoreError> {
        self.read(|s| s.turn(id).cloned())
    }

    /// Turns of a session in order.
    pub fn turns(&self, session: &SessionId) -> Result<Vec<TurnRecord>, StoreError> {
        self.read(|s| {
            let rec = s
                .sessions
                .get(session)
                .ok_or_else(|| StoreError::UnknownSession(session.clone()))?;
            Ok(rec.turns.iter().filter_map(|t| s.turns.get(t).cloned()).collect())
        })
    }

    /// Marks a model's first generation as started; fails if it already was.
    pub fn mark_started(&self, turn: &TurnId, model: &ModelId) -> Result<(), StoreError> {
        self.write(|state, _| {
            let t = state.turn(turn)?;
            if !t.plan.models.contains(model) {
                return Err(StoreError::UnknownModel {
                    turn: turn.clone(),
                    model: model.clone(),
                });
            }
            if t.started.contains(model) {
                return Err(StoreError::AlreadyStarted {
                    turn: turn.clone(),
                    model: model.clone(),
                });
            }
            Ok((
                Event::GenerationStarted {
                    turn: turn.clone(),
                    model: model.clone(),
                },
                (),
            ))
        })
    }

    pub fn record_result(&self, turn: &TurnId, result: ProviderResult) -> Result<(), StoreError> {
        self.write(|state, _| {
            state.turn(turn)?;
            Ok((
                Event::ResultRecorded {
                    turn: turn.clone(),
                    result,
                },
                (),
            ))
        })
    }

    pub fn record_feedback(&self, turn: &TurnId, input: FeedbackInput) -> Result<FeedbackRecord, StoreError> {
        self.write(|state, ts| {
            let t = state.turn(turn)?;
            if !t.plan.models.contains(&input.model) {
                return Err(StoreError::UnknownModel {
                    turn: turn.clone(),
                    model: input.model.clone(),
                });
            }
            match (input.kind, &input.text) {
                (FeedbackKind::Comment, None) => {
                    return Err(StoreError::BadFeedback("comment requires text".into()))
                }
                (FeedbackKind::Comment, Some(text)) if text.trim().chars().count() < MIN_COMMENT_CHARS => {
                    return Err(StoreError::CommentTooShort)
                }
                (FeedbackKind::Like | FeedbackKind::Dislike, Some(_)) => {
                    return Err(StoreError::BadFeedback("like/dislike carries no text".into()))
                }
                _ => {}
            }
            let rec = FeedbackRecord {
                session: t.session.clone(),
                turn: turn.clone(),
                model: input.model,
                kind: input.kind,
                text: input.text,
                timestamp: ts,
            };
            Ok((Event::FeedbackRecorded(rec.clone()), rec))
        })
    }

    pub fn store_document(&self, turn: &TurnId, document: FusionDocument) -> Result<DocumentId, StoreError> {
        self.write(|state, _| {
            state.turn(turn)?;
            let id = DocumentId(format!("d{}", state.next_document + 1));
            Ok((
                Event::DocumentStored {
                    id: id.clone(),
                    turn: turn.clone(),
                    document,
                },
                id,
            ))
        })
    }

    pub fn document(&self, id: &DocumentId) -> Result<DocumentRecord, StoreError> {
        self.read(|s| {
            s.documents
                .get(id)
                .cloned()
                .ok_or_else(|| StoreError::UnknownDocument(id.clone()))
        })
    }

    /// Applies an operation; operations on one store are serialized.
    pub fn apply_document_op(&self, id: &DocumentId, op: DocOp) -> Result<FusionDocument, StoreError> {
        self.write(|state, _| {
            let rec = state
                .documents
                .get(id)
                .ok_or_else(|| StoreError::UnknownDocument(id.clone()))?;
            let next = apply_op(&rec.document, &op)?;
            Ok((Event::DocumentOp { id: id.clone(), op }, next))
        })
    }

    pub fn history(&self, session: &SessionId) -> Result<Vec<HistoryEntry>, StoreError> {
        self.read(|s| {
            let rec = s
                .sessions
                .get(session)
                .ok_or_else(|| StoreError::UnknownSession(session.clone()))?;
            Ok(rec
                .turns
                .iter()
                .filter_map(|t| s.turns.get(t))
                .map(|turn| HistoryEntry {
                    fusion: turn
                        .documents
                        .iter()
                        .filter_map(|d| s.documents.get(d))
                        .map(|d| StoredDocument {
                            id: d.id.clone(),
                            document: d.document.clone(),
                        })
                        .collect(),
                    turn: turn.clone(),
                })
                .collect())
        })
    }

    /// Seed counts plus current like/dislike state of every turn, by the turn's major.
    pub fn performance_table(&self) -> PerformanceTable {
        let mut table = self.seed.clone();
        self.read(|s| {
            for turn in s.turns.values() {
                for (model, kind) in &turn.ratings {
                    match kind {
                        FeedbackKind::Like => table.add(turn.label.major(), model, 1, 0),
                        FeedbackKind::Dislike => table.add(turn.label.major(), model, 0, 1),
                        FeedbackKind::Comment => {}
                    }
                }
            }
        });
        table
    }
}
