//! Labels prompts with the keyword classifier, then shows how feedback and
//! pins reorder the dispatch plan.
//!
//! ```bash
//! cargo run --example classify_dispatch
//! ```

use polyfuse::classifier::classify_fallback;
use polyfuse::dispatch::plan;
use polyfuse::domain::{ModelId, TaskMajor};
use polyfuse::store::PerformanceTable;
use polyfuse::taxonomy::Taxonomy;

fn show(title: &str, p: &polyfuse::dispatch::DispatchPlan) {
    println!("{title}");
    for (i, m) in p.models.iter().enumerate() {
        let mode = if i < p.auto_run_count { "auto" } else { "manual" };
        println!("  {m:<8} {mode:<6} {}", p.reasons[m]);
    }
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let taxonomy = Taxonomy::builtin();
    for prompt in [
        "Write a poem about autumn leaves",
        "Compare Rust and Go for network services",
        "Proofread this paragraph for me",
        "Solve 3x + 4 = 19",
        "hello there",
    ] {
        let c = classify_fallback(taxonomy, prompt);
        println!("{prompt:<45} -> {} ({:.2})", c.label, c.confidence);
    }
    println!();

    let registry: Vec<ModelId> = ["gpt", "mistral", "gemini", "llama"].into_iter().map(ModelId::new).collect::<Result<_, _>>()?;
    let task = classify_fallback(taxonomy, "Write a poem about autumn leaves").label;
    let mut table = PerformanceTable::default();
    show("cold start:", &plan(task, &[], &table, &registry)?);

    table.add(TaskMajor::ContentGeneration, &registry[2], 3, 0);
    table.add(TaskMajor::ContentGeneration, &registry[0], 1, 2);
    show("after feedback:", &plan(task, &[], &table, &registry)?);

    let pins = [registry[3].clone()];
    show("llama pinned:", &plan(task, &pins, &table, &registry)?);
    Ok(())
}
