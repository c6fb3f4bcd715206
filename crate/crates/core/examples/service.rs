//! Runs the HTTP service on a local port with mock providers, then drives a
//! whole turn through the client: query, manual run, fuse, edit, export.
//!
//! ```bash
//! cargo run --example service
//! ```

use std::sync::Arc;

use futures::StreamExt;
use polyfuse::app::{App, QueryEvent, QueryInput};
use polyfuse::client::RemoteClient;
use polyfuse::document::{DocOp, OpKind};
use polyfuse::domain::ModelId;
use polyfuse::gateway::{Gateway, MockScript, ProviderConfig};

#[tokio::main]
async fn main() -> Result<(), Box<dyn std::error::Error>> {
    let gateway = Gateway::new();
    for (name, text) in [
        ("a", "## Summary\nRust is a systems language focused on safety.\nIt has no garbage collector.\n"),
        ("b", "## Summary\nRust is a systems language focused on safety and speed.\n"),
        ("c", "## Summary\nRust is a systems language focused on safety.\nIts compiler is strict.\n"),
    ] {
        gateway.register(ProviderConfig::mock(ModelId::new(name)?, MockScript::text(text)))?;
    }
    let app = Arc::new(App::with_gateway(Arc::new(gateway)));
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await?;
    let base = format!("http://{}", listener.local_addr()?);
    tokio::spawn(polyfuse::service::serve(app, listener));
    println!("serving on {base}");

    let client = RemoteClient::new(base);
    let session = client.create_session().await?;
    let input = QueryInput { prompt: "Tell me about Rust".into(), ..Default::default() };
    let (turn, mut events) = client.query(&session, &input).await?;
    while let Some(ev) = events.next().await {
        match ev? {
            QueryEvent::Chunk { .. } => {}
            QueryEvent::DispatchPlan { plan, .. } => println!("plan {:?}, auto-run {}", plan.models, plan.auto_run_count),
            other => println!("{}: {}", other.name(), other.data_json()),
        }
    }

    let c = ModelId::new("c")?;
    let ran: Vec<_> = client.run(&turn, &c).await?.collect().await;
    println!("manual run of c produced {} events", ran.len());

    let (doc_id, doc) = client.fuse(&turn, &[]).await?;
    println!("document {doc_id}: {:?}, {} units", doc.recommendation, doc.unit_count());
    let first = doc.units().next().map(|u| u.id.clone()).unwrap_or_default();
    client.apply_op(&doc_id, &DocOp::edit(first, "Rust: memory safety without a garbage collector.")).await?;
    if let Some(last) = doc.units().last() {
        client.apply_op(&doc_id, &DocOp::new(OpKind::Hide, last.id.clone())).await?;
    }
    println!("--- export ---\n{}", client.export(&doc_id).await?);
    Ok(())
}
