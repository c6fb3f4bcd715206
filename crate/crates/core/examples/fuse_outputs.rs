//! Fuses three answers into one source-attributed document with the
//! deterministic engine and prints the divergence report.
//!
//! ```bash
//! cargo run --example fuse_outputs
//! ```

use std::sync::Arc;

use polyfuse::document::export;
use polyfuse::domain::{ModelId, ProviderResult, TaskLabel, TaskMinor};
use polyfuse::fusion::FusionEngine;
use polyfuse::taxonomy::Taxonomy;

const ANSWERS: [(&str, &str); 3] = [
    (
        "a",
        "## Information Provision\nThe Eiffel Tower is located in Paris, France.\nIt was completed in 1889 for the World's Fair.\n\n## Summary\nThe Eiffel Tower is the most famous landmark in Paris.\n",
    ),
    (
        "b",
        "## Information Provision\nThe Eiffel Tower is located in Paris, France.\nAbout seven million people visit it every year.\n\n## Summary\nThe Eiffel Tower is the most famous landmark in Paris.\n",
    ),
    (
        "c",
        "## Information Provision\nThe Eiffel Tower is located in Paris, France.\nIt was finished in 1889 for the World's Fair.\n\n## Summary\nIt is the best known landmark in Paris.\n",
    ),
];

#[tokio::main]
async fn main() -> Result<(), Box<dyn std::error::Error>> {
    let engine = FusionEngine::deterministic(Arc::new(Taxonomy::builtin().clone()));
    let task = TaskLabel::from_minor(TaskMinor::InformationQuery);
    let results: Vec<ProviderResult> = ANSWERS
        .iter()
        .map(|(m, text)| Ok(ProviderResult::complete(ModelId::new(*m)?, text.to_string(), 0, 0)))
        .collect::<Result<_, polyfuse::domain::InvalidModelId>>()?;
    let models: Vec<ModelId> = results.iter().map(|r| r.model.clone()).collect();

    let out = engine.fuse(&results, task, &models, &models).await?;
    println!("divergence {:.3}: {}", out.divergence.score, out.divergence.rationale);
    println!("{:?}: {}\n", out.document.recommendation, out.document.reason);
    for block in &out.document.blocks {
        println!("## {}", block.name);
        for unit in &block.units {
            for v in &unit.variants {
                let sources: Vec<&str> = v.sources.iter().map(ModelId::as_str).collect();
                println!("  {} [{}] {}", unit.id, sources.join("+"), v.content);
            }
        }
    }
    println!("\n--- export ---\n{}", export(&out.document));
    Ok(())
}
