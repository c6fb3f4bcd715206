use std::collections::BTreeMap;
use std::path::Path;
use std::process::Command;
use std::sync::Arc;

use futures::StreamExt;
use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};

use polyfuse::app::{App, QueryEvent, QueryInput};
use polyfuse::client::RemoteClient;
use polyfuse::document::{apply_op, DocOp, Direction, OpKind};
use polyfuse::domain::{decode_fusion_document, DocumentId, FusionDocument, ModelId, ResultStatus, TaskMajor, TurnId};
use polyfuse::gateway::{Gateway, MockProvider, MockScript, PromptCapture, ProviderConfig};
use polyfuse::service::{serve, DOCUMENT_HEADER, TURN_HEADER};

use crate::common::id;

const A: &str = include_str!("../fixtures/golden/a.md");
const B: &str = include_str!("../fixtures/golden/b.md");
const C: &str = include_str!("../fixtures/golden/c.md");
const MOCK_CONFIG: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/examples/mock-config.json");
const BIN: &str = env!("CARGO_BIN_EXE_polyfuse");

fn fail(msg: impl Into<String>) -> String {
    msg.into()
}

struct Server {
    base: String,
    app: Arc<App>,
    captures: BTreeMap<ModelId, PromptCapture>,
}

async fn start() -> Result<Server, String> {
    let gateway = Gateway::new();
    let mut captures = BTreeMap::new();
    for (name, script) in [
        ("a", MockScript::text(A)),
        ("b", MockScript::text(B)),
        ("c", MockScript::text(C)),
        ("d", MockScript::failing("upstream unavailable")),
    ] {
        let mut script = script;
        script.chunk_delay_ms = 1;
        let provider = MockProvider::new(script.clone());
        captures.insert(id(name), provider.capture());
        gateway
            .register_provider(ProviderConfig::mock(id(name), script), Arc::new(provider))
            .map_err(|e| e.to_string())?;
    }
    let app = Arc::new(App::with_gateway(Arc::new(gateway)));
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.map_err(|e| e.to_string())?;
    let base = format!("http://{}", listener.local_addr().map_err(|e| e.to_string())?);
    tokio::spawn(serve(app.clone(), listener));
    Ok(Server { base, app, captures })
}

async fn collect(events: polyfuse::client::RemoteEvents) -> Result<Vec<QueryEvent>, String> {
    let all: Vec<_> = events.collect().await;
    all.into_iter().map(|e| e.map_err(|e| e.to_string())).collect()
}

/// task_label, dispatch_plan, chunks and results in any interleaving, done.
fn check_turn_stream(events: &[QueryEvent], major: TaskMajor, auto: usize) -> Result<BTreeMap<ModelId, polyfuse::domain::ProviderResult>, String> {
    let Some(QueryEvent::TaskLabel { label, .. }) = events.first() else {
        return Err(fail("first event is not task_label"));
    };
    if label.major() != major {
        return Err(format!("classified as {label}, expected {major}"));
    }
    let Some(QueryEvent::DispatchPlan { plan, .. }) = events.get(1) else {
        return Err(fail("second event is not dispatch_plan"));
    };
    if plan.auto_run_count != auto {
        return Err(format!("auto-run {} expected {auto}", plan.auto_run_count));
    }
    if !matches!(events.last(), Some(QueryEvent::Done { .. })) {
        return Err(fail("last event is not done"));
    }
    let mut streamed: BTreeMap<ModelId, String> = BTreeMap::new();
    let mut results = BTreeMap::new();
    for ev in &events[2..events.len() - 1] {
        match ev {
            QueryEvent::Chunk { model, text } => {
                if results.contains_key(model) {
                    return Err(format!("chunk for {model} after its result"));
                }
                streamed.entry(model.clone()).or_default().push_str(text);
            }
            QueryEvent::Result { result } => {
                if result.status == ResultStatus::Complete && streamed.get(&result.model).map(String::as_str) != Some(&result.content) {
                    return Err(format!("streamed chunks of {} differ from its result", result.model));
                }
                results.insert(result.model.clone(), result.clone());
            }
            other => return Err(format!("unexpected {} inside the stream", other.name())),
        }
    }
    let ran: Vec<&ModelId> = plan.models[..auto].iter().collect();
    if results.keys().collect::<Vec<_>>().len() != ran.len() || !ran.iter().all(|m| results.contains_key(*m)) {
        return Err(format!("results for {:?}, expected {ran:?}", results.keys().collect::<Vec<_>>()));
    }
    Ok(results)
}

fn cli(args: &[&str]) -> Result<(Vec<u8>, String), String> {
    let out = Command::new(BIN).args(args).output().map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(format!("polyfuse {args:?} exited {}: {}", out.status, String::from_utf8_lossy(&out.stderr)));
    }
    Ok((out.stdout, String::from_utf8_lossy(&out.stderr).into_owned()))
}

struct FlowOutput {
    fused: Vec<u8>,
    edited: Vec<u8>,
    export: Vec<u8>,
}

fn ops_for(doc: &FusionDocument) -> Vec<DocOp> {
    let multi = doc.units().find(|u| u.variants.len() > 1).expect("a unit with variants");
    let last = doc.units().last().unwrap();
    vec![
        DocOp::switch(multi.id.clone(), Direction::Next),
        DocOp::new(OpKind::Hide, doc.units().next().unwrap().id.clone()),
        DocOp::edit(last.id.clone(), "Edited \"summary\" line."),
    ]
}

fn op_args(op: &DocOp) -> Vec<String> {
    let name = match op.op {
        OpKind::Switch => "switch",
        OpKind::Hide => "hide",
        OpKind::Show => "show",
        OpKind::Edit => "edit",
        OpKind::ClearEdit => "clear-edit",
    };
    let mut args = vec![name.to_owned(), op.unit.clone()];
    args.extend(op.payload.clone());
    args
}

/// query, run the third model, fuse, three ops, export: all through the CLI.
fn cli_flow(backend: &[&str]) -> Result<FlowOutput, String> {
    let with = |rest: &[&str]| -> Vec<String> {
        let mut v: Vec<String> = backend.iter().map(|s| s.to_string()).collect();
        v.push("--json".into());
        v.extend(rest.iter().map(|s| s.to_string()));
        v
    };
    let run = |args: Vec<String>| {
        let refs: Vec<&str> = args.iter().map(String::as_str).collect();
        cli(&refs)
    };
    let (out, _) = run(with(&["query", "Tell me about the Eiffel Tower"]))?;
    let first = String::from_utf8_lossy(&out).lines().next().unwrap_or_default().to_owned();
    let event: QueryEvent = serde_json::from_str(&first).map_err(|e| format!("query output: {e}"))?;
    let QueryEvent::TaskLabel { turn, .. } = event else {
        return Err(fail("query output does not start with task_label"));
    };
    run(with(&["run", turn.as_str(), "c"]))?;
    let (fused, stderr) = run(with(&["fuse", turn.as_str()]))?;
    let doc_id = stderr
        .lines()
        .find_map(|l| l.strip_prefix("document "))
        .ok_or_else(|| fail("fuse did not report a document id"))?
        .trim()
        .to_owned();
    let doc = decode_fusion_document(&fused).map_err(|e| e.to_string())?;
    let mut edited = Vec::new();
    for op in ops_for(&doc) {
        let mut args = vec!["doc".to_owned(), doc_id.clone()];
        args.extend(op_args(&op));
        let refs: Vec<&str> = args.iter().map(String::as_str).collect();
        edited = run(with(&refs))?.0;
    }
    let (export, _) = run(with(&["export", &doc_id]))?;
    Ok(FlowOutput { fused, edited, export })
}

async fn http_flow(server: &Server) -> Result<FlowOutput, String> {
    let client = RemoteClient::new(server.base.clone());
    let http = reqwest::Client::new();
    let session = client.create_session().await.map_err(|e| e.to_string())?;
    let input = QueryInput { prompt: "Tell me about the Eiffel Tower".into(), ..Default::default() };
    let (turn, events) = client.query(&session, &input).await.map_err(|e| e.to_string())?;
    check_turn_stream(&collect(events).await?, TaskMajor::InformationRetrieval, 2)?;
    collect(client.run(&turn, &id("c")).await.map_err(|e| e.to_string())?).await?;

    let resp = http
        .post(format!("{}/turns/{turn}/fuse", server.base))
        .send()
        .await
        .map_err(|e| e.to_string())?;
    let doc_id = resp
        .headers()
        .get(DOCUMENT_HEADER)
        .and_then(|v| v.to_str().ok())
        .ok_or_else(|| fail("fuse response lacks the document header"))?
        .to_owned();
    let fused = resp.bytes().await.map_err(|e| e.to_string())?.to_vec();
    let doc = decode_fusion_document(&fused).map_err(|e| e.to_string())?;
    let mut edited = Vec::new();
    for op in ops_for(&doc) {
        let resp = http
            .post(format!("{}/documents/{doc_id}/ops", server.base))
            .body(serde_json::to_vec(&op).unwrap())
            .send()
            .await
            .map_err(|e| e.to_string())?;
        if !resp.status().is_success() {
            return Err(format!("op {op:?}: status {}", resp.status()));
        }
        edited = resp.bytes().await.map_err(|e| e.to_string())?.to_vec();
    }
    let export = http
        .get(format!("{}/documents/{doc_id}/export", server.base))
        .send()
        .await
        .map_err(|e| e.to_string())?
        .bytes()
        .await
        .map_err(|e| e.to_string())?
        .to_vec();
    Ok(FlowOutput { fused, edited, export })
}

fn replay(original: &FusionDocument, ops: &[DocOp]) -> Vec<FusionDocument> {
    let mut states = vec![original.clone()];
    for op in ops {
        let next = apply_op(states.last().unwrap(), op).expect("logged ops replay");
        states.push(next);
    }
    states
}

async fn op_storm(server: &Server, doc_id: &DocumentId) -> Result<usize, String> {
    let doc = server.app.document(doc_id).map_err(|e| e.to_string())?;
    let before = server.app.store().document(doc_id).map_err(|e| e.to_string())?.ops.len();
    let units: Vec<(String, bool)> = doc.units().map(|u| (u.id.clone(), u.variants.len() > 1)).collect();
    let mut rng = StdRng::seed_from_u64(71);
    let mut requests = Vec::new();
    for i in 0..200 {
        let (unit, multi) = units.choose(&mut rng).unwrap().clone();
        let op = match rng.gen_range(0..4) {
            0 if multi => DocOp::switch(unit, if rng.gen_bool(0.5) { Direction::Next } else { Direction::Prev }),
            1 => DocOp::new(OpKind::Hide, unit),
            2 => DocOp::new(OpKind::Show, unit),
            _ => DocOp::edit(unit, format!("storm edit {i}")),
        };
        requests.push(op);
    }
    let http = reqwest::Client::new();
    let url = format!("{}/documents/{doc_id}/ops", server.base);
    let responses = futures::future::join_all(requests.iter().map(|op| {
        let req = http.post(&url).body(serde_json::to_vec(op).unwrap());
        async move {
            let resp = req.send().await.map_err(|e| e.to_string())?;
            if !resp.status().is_success() {
                return Err(format!("status {}", resp.status()));
            }
            let bytes = resp.bytes().await.map_err(|e| e.to_string())?;
            decode_fusion_document(&bytes).map_err(|e| e.to_string())
        }
    }))
    .await;

    let record = server.app.store().document(doc_id).map_err(|e| e.to_string())?;
    let states = replay(&record.original, &record.ops);
    if states.last() != Some(&record.document) {
        return Err(fail("stored document differs from replay of its op log"));
    }
    let fresh = &record.ops[before..];
    if fresh.len() != requests.len() {
        return Err(format!("{} ops logged for {} requests", fresh.len(), requests.len()));
    }
    // each response is the state right after its own op in the log, each log slot used once
    let mut used = vec![false; fresh.len()];
    for (op, resp) in requests.iter().zip(responses) {
        let resp = resp?;
        let slot = (0..fresh.len()).find(|&k| !used[k] && fresh[k] == *op && states[before + k + 1] == resp);
        match slot {
            Some(k) => used[k] = true,
            None => return Err(format!("response to {op:?} matches no prefix of the op log")),
        }
    }
    Ok(requests.len())
}

pub async fn run() -> Result<String, String> {
    let server = start().await?;
    let client = RemoteClient::new(server.base.clone());

    // raw wire check: content type and turn header
    let session = client.create_session().await.map_err(|e| e.to_string())?;
    let resp = reqwest::Client::new()
        .post(format!("{}/sessions/{session}/query", server.base))
        .body(r#"{"prompt":"write a poem about the sea"}"#)
        .send()
        .await
        .map_err(|e| e.to_string())?;
    let content_type = resp.headers().get("content-type").and_then(|v| v.to_str().ok()).unwrap_or("").to_owned();
    let turn1 = TurnId(resp.headers().get(TURN_HEADER).and_then(|v| v.to_str().ok()).unwrap_or("").to_owned());
    let raw = resp.text().await.map_err(|e| e.to_string())?;
    if !content_type.starts_with("text/event-stream") {
        return Err(format!("query content type {content_type}"));
    }
    let names: Vec<&str> = raw.lines().filter_map(|l| l.strip_prefix("event: ")).collect();
    if names.first() != Some(&"task_label") || names.get(1) != Some(&"dispatch_plan") || names.last() != Some(&"done") {
        return Err(format!("wire event order {:?}", &names[..names.len().min(3)]));
    }
    let turn = client.turn(&turn1).await.map_err(|e| e.to_string())?;
    if turn.plan.auto_run_count != 4 || turn.results.len() != 4 {
        return Err(format!("content generation ran {} of {}", turn.results.len(), turn.plan.auto_run_count));
    }

    // decoded stream on the same session: order, isolation of the failing provider
    let input = QueryInput { prompt: "write a poem about the sea".into(), ..Default::default() };
    let (turn2, events) = client.query(&session, &input).await.map_err(|e| e.to_string())?;
    let results = check_turn_stream(&collect(events).await?, TaskMajor::ContentGeneration, 4)?;
    if results[&id("d")].status != ResultStatus::Failed || !results[&id("d")].error.as_deref().unwrap_or("").contains("upstream unavailable") {
        return Err(fail("failing provider not reported as failed"));
    }
    for (m, text) in [("a", A), ("b", B), ("c", C)] {
        if results[&id(m)].content != text {
            return Err(format!("{m} content damaged by the failing provider"));
        }
    }
    // the follow-up cites the first complete result of the previous turn
    let first = turn.first_complete().ok_or_else(|| fail("no complete result"))?.content.clone();
    for m in ["a", "b", "c", "d"] {
        if !server.captures[&id(m)].last().unwrap_or_default().contains(&first) {
            return Err(format!("{m} did not receive the prior turn's answer as context"));
        }
    }
    let _ = turn2;

    // pins lead the plan and stream first
    let solve = client.create_session().await.map_err(|e| e.to_string())?;
    let input = QueryInput { prompt: "Solve x + 2 = 5".into(), pins: vec![id("b")], cite: vec![] };
    let (_, events) = client.query(&solve, &input).await.map_err(|e| e.to_string())?;
    let events = collect(events).await?;
    check_turn_stream(&events, TaskMajor::ProblemSolving, 2)?;
    let Some(QueryEvent::DispatchPlan { plan, .. }) = events.get(1) else { unreachable!() };
    if plan.models.first() != Some(&id("b")) {
        return Err(format!("pinned model not first: {:?}", plan.models));
    }
    let first_chunk = events.iter().find_map(|e| match e {
        QueryEvent::Chunk { model, .. } => Some(model.clone()),
        _ => None,
    });
    if first_chunk != Some(id("b")) {
        return Err(format!("first chunk from {first_chunk:?}, expected the pinned model"));
    }

    // one flow, three front ends
    let http = http_flow(&server).await?;
    let store = tempfile::tempdir().map_err(|e| e.to_string())?;
    let local = cli_flow(&["--config", MOCK_CONFIG, "--store", store.path().to_str().unwrap()])?;
    let base = server.base.clone();
    let remote = tokio::task::spawn_blocking(move || cli_flow(&["--remote", &base]))
        .await
        .map_err(|e| e.to_string())??;
    for (name, out) in [("local CLI", &local), ("remote CLI", &remote)] {
        if out.fused != http.fused || out.edited != http.edited || out.export != http.export {
            return Err(format!("{name} output differs from the HTTP bodies"));
        }
    }
    if !Path::new(store.path()).join("events.jsonl").exists() {
        return Err(fail("local CLI did not persist"));
    }

    // concurrent operations are linearizable
    let (doc_id, _) = server.app.fuse(&turn1, &[]).await.map_err(|e| e.to_string())?;
    let storm = op_storm(&server, &doc_id).await?;
    Ok(format!("stream order, failure isolation, pins, context, CLI/HTTP byte-equal, {storm}-op storm"))
}
