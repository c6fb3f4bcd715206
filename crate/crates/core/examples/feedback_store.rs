//! Records turns and feedback in an on-disk event log, reopens it, and prints
//! the smoothed preference scores that drive dispatch.
//!
//! ```bash
//! cargo run --example feedback_store
//! ```

use std::collections::BTreeMap;

use polyfuse::classifier::classify_fallback;
use polyfuse::dispatch::plan;
use polyfuse::domain::{ModelId, ProviderResult};
use polyfuse::store::{FeedbackInput, FeedbackKind, NewTurn, PerformanceTable, Store};
use polyfuse::taxonomy::Taxonomy;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::temp_dir().join(format!("polyfuse-example-{}", std::process::id()));
    let registry: Vec<ModelId> = ["a", "b", "c"].into_iter().map(ModelId::new).collect::<Result<_, _>>()?;
    let classification = classify_fallback(Taxonomy::builtin(), "Tell me about the Moon");

    {
        let store = Store::open(&dir)?.with_snapshot_every(4);
        let session = store.create_session()?;
        for (i, verdicts) in [[true, false, true], [true, false, false], [false, false, true]].iter().enumerate() {
            let plan = plan(classification.label, &[], &store.performance_table(), &registry)?;
            let prompt = format!("Tell me about the Moon, part {i}");
            let turn = store.begin_turn(&session, NewTurn { prompt, classification, plan, context: vec![] })?;
            for (model, like) in registry.iter().zip(verdicts) {
                store.record_result(&turn.id, ProviderResult::complete(model.clone(), "...".into(), 0, 10))?;
                let kind = if *like { FeedbackKind::Like } else { FeedbackKind::Dislike };
                store.record_feedback(&turn.id, FeedbackInput { model: model.clone(), kind, text: None })?;
            }
        }
        // a later vote replaces the earlier one for the same turn and model
        let first = store.turns(&session)?[0].id.clone();
        store.record_feedback(&first, FeedbackInput { model: registry[1].clone(), kind: FeedbackKind::Like, text: None })?;
    }

    let store = Store::open(&dir)?;
    let table: PerformanceTable = store.performance_table();
    let major = classification.label.major();
    let scores: BTreeMap<_, _> = table.scores(major, &registry);
    for (m, s) in &scores {
        let c = table.counts(major, m);
        println!("{m}: {} likes, {} dislikes, raw {:.3}, normalized {:.3}", c.likes, c.dislikes, s.raw, s.normalized);
    }
    let next = plan(classification.label, &[], &table, &registry)?;
    println!("next plan: {:?}", next.models);
    std::fs::remove_dir_all(&dir)?;
    Ok(())
}
