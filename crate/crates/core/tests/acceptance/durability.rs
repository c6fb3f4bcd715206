use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;
use std::sync::atomic::{AtomicI64, Ordering};
use std::sync::Arc;

use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};

use polyfuse::classifier::{Classification, EngineTag};
use polyfuse::dispatch::plan_from_scores;
use polyfuse::document::{DocOp, Direction, OpKind};
use polyfuse::domain::{DocumentId, ProviderResult, SessionId, TaskLabel, TaskMajor, TaskMinor, TurnId};
use polyfuse::store::{FeedbackInput, FeedbackKind, NewTurn, Store, EVENTS_FILE};

use crate::common::{awkward_text, registry, unit_ids, valid_document};

struct Observed {
    state: Vec<u8>,
    history: Vec<String>,
    table: String,
    scores: Vec<u64>,
}

fn observe(store: &Store, sessions: &[SessionId]) -> Observed {
    let history = sessions
        .iter()
        .map(|s| serde_json::to_string(&store.history(s).unwrap()).unwrap())
        .collect();
    let table = store.performance_table();
    let scores = TaskMajor::ALL
        .iter()
        .flat_map(|m| table.scores(*m, &registry()).into_values().flat_map(|s| [s.raw.to_bits(), s.normalized.to_bits()]))
        .collect();
    Observed {
        state: store.state_bytes(),
        history,
        table: serde_json::to_string(&table).unwrap(),
        scores,
    }
}

fn same(a: &Observed, b: &Observed) -> bool {
    a.state == b.state && a.history == b.history && a.table == b.table && a.scores == b.scores
}

struct Workload {
    sessions: Vec<SessionId>,
    turns: Vec<TurnId>,
    docs: Vec<DocumentId>,
}

fn mutate(store: &Store, w: &mut Workload, rng: &mut StdRng, steps: usize) {
    for _ in 0..steps {
        match rng.gen_range(0..10) {
            0 => w.sessions.push(store.create_session().unwrap()),
            1 | 2 if !w.sessions.is_empty() => {
                let session = w.sessions.choose(rng).unwrap();
                let label = TaskLabel::from_minor(*TaskMinor::ALL.choose(rng).unwrap());
                let plan = plan_from_scores(label, &[], &BTreeMap::new(), &registry(), true).unwrap();
                let classification = Classification { label, confidence: 0.5, engine: EngineTag::Fallback };
                let prompt = awkward_text(rng);
                let turn = store.begin_turn(session, NewTurn { prompt, classification, plan, context: vec![] }).unwrap();
                w.turns.push(turn.id);
            }
            3 | 4 if !w.turns.is_empty() => {
                let turn = w.turns.choose(rng).unwrap();
                let model = registry().choose(rng).unwrap().clone();
                let _ = store.mark_started(turn, &model);
                let result = if rng.gen_bool(0.8) {
                    ProviderResult::complete(model, awkward_text(rng), rng.gen_range(0..1_000_000), rng.gen_range(0..5000))
                } else {
                    ProviderResult::failed(model, "timed out".into(), 0, 30_000)
                };
                store.record_result(turn, result).unwrap();
            }
            5 | 6 if !w.turns.is_empty() => {
                let turn = w.turns.choose(rng).unwrap();
                let model = registry().choose(rng).unwrap().clone();
                let (kind, text) = match rng.gen_range(0..3) {
                    0 => (FeedbackKind::Like, None),
                    1 => (FeedbackKind::Dislike, None),
                    _ => (FeedbackKind::Comment, Some(format!("remark: {}", awkward_text(rng)))),
                };
                store.record_feedback(turn, FeedbackInput { model, kind, text }).unwrap();
            }
            7 if !w.turns.is_empty() => {
                let turn = w.turns.choose(rng).unwrap();
                w.docs.push(store.store_document(turn, valid_document(rng)).unwrap());
            }
            8 | 9 if !w.docs.is_empty() => {
                let doc = w.docs.choose(rng).unwrap();
                let ids = unit_ids(&store.document(doc).unwrap().document);
                let Some(unit) = ids.choose(rng).cloned() else { continue };
                let op = match rng.gen_range(0..4) {
                    0 => DocOp::switch(unit, Direction::Next),
                    1 => DocOp::new(OpKind::Hide, unit),
                    2 => DocOp::edit(unit, awkward_text(rng)),
                    _ => DocOp::new(OpKind::Show, unit),
                };
                let _ = store.apply_document_op(doc, op);
            }
            _ => {}
        }
    }
}

fn open(dir: &Path, clock: &Arc<AtomicI64>, every: u64) -> Store {
    let clock = clock.clone();
    Store::open(dir)
        .unwrap()
        .with_snapshot_every(every)
        .with_clock(move || clock.fetch_add(1, Ordering::SeqCst))
}

pub fn run() -> Result<String, String> {
    let mut rng = StdRng::seed_from_u64(59);
    let mut rounds = 0;
    for every in [3, 17, 100, 10_000] {
        let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
        let clock = Arc::new(AtomicI64::new(1));
        let mut w = Workload { sessions: vec![], turns: vec![], docs: vec![] };
        let mut expected = {
            let store = open(dir.path(), &clock, every);
            w.sessions.push(store.create_session().unwrap());
            mutate(&store, &mut w, &mut rng, 150);
            observe(&store, &w.sessions)
        };
        for round in 0..4 {
            // torn write: half a line at the end of the log
            if round % 2 == 1 {
                let mut f = std::fs::OpenOptions::new().append(true).open(dir.path().join(EVENTS_FILE)).unwrap();
                f.write_all(br#"{"ts":99,"kind":"feedback_rec"#).unwrap();
            }
            let store = open(dir.path(), &clock, every);
            let reopened = observe(&store, &w.sessions);
            if !same(&expected, &reopened) {
                return Err(format!("snapshot every {every}, round {round}: reopened store differs"));
            }
            mutate(&store, &mut w, &mut rng, 60);
            expected = observe(&store, &w.sessions);
            rounds += 1;
        }
        let store = open(dir.path(), &clock, every);
        if !same(&expected, &observe(&store, &w.sessions)) {
            return Err(format!("snapshot every {every}: final reopen differs"));
        }
    }
    Ok(format!("{rounds} reopen rounds across 4 snapshot intervals, torn tails included"))
}
