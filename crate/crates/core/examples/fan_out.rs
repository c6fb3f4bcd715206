//! Streams one prompt to several providers at once. One of them fails and
//! the others are unaffected.
//!
//! ```bash
//! cargo run --example fan_out
//! ```

use std::sync::Arc;

use futures::StreamExt;
use polyfuse::domain::{ModelId, ResultStatus};
use polyfuse::gateway::{Chunking, Gateway, GenerationEvent, GenerationRequest, MockScript, ProviderConfig};

#[tokio::main]
async fn main() -> Result<(), Box<dyn std::error::Error>> {
    let gateway = Gateway::new();
    let scripts = [
        ("fast", MockScript::text("Paris is the capital of France.").with_chunking(Chunking::Words)),
        ("slow", MockScript::text("The capital of France is Paris.").with_delay(40)),
        ("broken", MockScript::failing("rate limited")),
    ];
    for (name, script) in scripts {
        gateway.register(ProviderConfig::mock(ModelId::new(name)?, script))?;
    }
    let gateway = Arc::new(gateway);
    let req = GenerationRequest::new("What is the capital of France?", "demo");

    let streams = gateway
        .models()
        .iter()
        .map(|m| gateway.generate(m, &req))
        .collect::<Result<Vec<_>, _>>()?;
    let mut merged = futures::stream::select_all(streams);
    while let Some(event) = merged.next().await {
        match event {
            GenerationEvent::Chunk { model, text } => println!("{model:>6} | {text:?}"),
            GenerationEvent::Finished(r) if r.status == ResultStatus::Complete => {
                println!("{:>6} | done in {} ms: {}", r.model, r.latency_ms, r.content)
            }
            GenerationEvent::Finished(r) => println!("{:>6} | failed: {}", r.model, r.error.unwrap_or_default()),
        }
    }

    // the same thing without streaming
    let results = gateway.fan_out(&gateway.models(), &req.clone().with_turn(1)).await?;
    for (model, r) in results {
        println!("{model}: {:?} {}", r.status, r.summary);
    }
    Ok(())
}
