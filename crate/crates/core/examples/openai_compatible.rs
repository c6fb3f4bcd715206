//! Streams from an OpenAI-compatible chat-completions endpoint. A tiny local
//! server stands in for the real API so this runs offline.
//!
//! ```bash
//! cargo run --example openai_compatible
//! ```
//!
//! Against a real endpoint, register the same config with its URL and
//! `auth_env` naming the variable that holds the key.

use std::convert::Infallible;

use axum::response::sse::{Event, Sse};
use axum::routing::post;
use axum::{Json, Router};
use futures::StreamExt;
use polyfuse::domain::ModelId;
use polyfuse::gateway::{Gateway, GenerationEvent, GenerationRequest, ProviderConfig, ProviderKind};
use serde_json::{json, Value};

async fn completions(Json(body): Json<Value>) -> Sse<impl futures::Stream<Item = Result<Event, Infallible>>> {
    let prompt = body["messages"][0]["content"].as_str().unwrap_or_default().to_owned();
    let reply = format!("({}) You asked: {prompt}", body["model"].as_str().unwrap_or("?"));
    let mut frames: Vec<String> = reply
        .split_inclusive(' ')
        .map(|w| json!({"choices": [{"index": 0, "delta": {"content": w}}]}).to_string())
        .collect();
    frames.push("[DONE]".into());
    Sse::new(futures::stream::iter(frames.into_iter().map(|f| Ok(Event::default().data(f)))))
}

#[tokio::main]
async fn main() -> Result<(), Box<dyn std::error::Error>> {
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await?;
    let endpoint = format!("http://{}/v1/chat/completions", listener.local_addr()?);
    tokio::spawn(async move { axum::serve(listener, Router::new().route("/v1/chat/completions", post(completions))).await });

    let gateway = Gateway::new();
    gateway.register(ProviderConfig {
        model: ModelId::new("local")?,
        kind: ProviderKind::OpenaiCompatible,
        endpoint: Some(endpoint),
        auth_env: None,
        timeout_s: 10.0,
        upstream_model: Some("tiny-1".into()),
        mock: None,
    })?;

    let req = GenerationRequest::new("How tall is Mont Blanc?", "demo");
    let mut stream = gateway.generate(&ModelId::new("local")?, &req)?;
    while let Some(event) = stream.next().await {
        match event {
            GenerationEvent::Chunk { text, .. } => print!("{text}|"),
            GenerationEvent::Finished(r) => println!("\n{:?} after {} ms: {}", r.status, r.latency_ms, r.content),
        }
    }
    Ok(())
}
