use std::sync::Arc;

use polyfuse::document::export;
use polyfuse::domain::{encode_fusion_document, ProviderResult, Recommendation, TaskLabel, TaskMinor};
use polyfuse::fusion::FusionEngine;
use polyfuse::taxonomy::Taxonomy;

use crate::common::id;

const A: &str = include_str!("../fixtures/golden/a.md");
const B: &str = include_str!("../fixtures/golden/b.md");
const C: &str = include_str!("../fixtures/golden/c.md");
const EXPECTED: &str = include_str!("../fixtures/golden/expected.json");
const EXPECTED_EXPORT: &str = include_str!("../fixtures/golden/expected_export.txt");

fn results(texts: &[(&str, &str)]) -> Vec<ProviderResult> {
    texts
        .iter()
        .map(|(m, t)| ProviderResult::complete(id(m), t.to_string(), 0, 0))
        .collect()
}

pub async fn run() -> Result<String, String> {
    let engine = FusionEngine::deterministic(Arc::new(Taxonomy::builtin().clone()));
    let task = TaskLabel::from_minor(TaskMinor::InformationQuery);
    let models = [id("a"), id("b"), id("c")];

    let forward = results(&[("a", A), ("b", B), ("c", C)]);
    let mut reversed = forward.clone();
    reversed.reverse();
    let mut outputs = Vec::new();
    for input in [&forward, &forward, &reversed] {
        let out = engine.fuse(input, task, &models, &models).await.map_err(|e| e.to_string())?;
        outputs.push(out);
    }
    let bytes = encode_fusion_document(&outputs[0].document);
    if bytes != EXPECTED.as_bytes() {
        return Err("three-model fixture differs from the golden document".into());
    }
    if export(&outputs[0].document) != EXPECTED_EXPORT {
        return Err("export differs from the golden text".into());
    }
    if (outputs[0].divergence.score - (1.0 - 70.0 / 107.0)).abs() > 1e-12 {
        return Err(format!("divergence {} expected {}", outputs[0].divergence.score, 1.0 - 70.0 / 107.0));
    }
    for out in &outputs[1..] {
        if encode_fusion_document(&out.document) != bytes || out.divergence != outputs[0].divergence {
            return Err("repeated fusion is not byte-identical".into());
        }
    }

    let pair = [id("a"), id("b")];
    let same = engine
        .fuse(&results(&[("a", A), ("b", A)]), task, &pair, &pair)
        .await
        .map_err(|e| e.to_string())?;
    if same.divergence.score != 0.0
        || same.document.recommendation != Recommendation::Fusion
        || !same.document.units().all(|u| u.is_consensus())
    {
        return Err("identical outputs did not fuse into all-consensus units".into());
    }

    let design = TaskLabel::from_minor(TaskMinor::SolutionDesign);
    let apart = engine
        .fuse(
            &results(&[("a", "Use a queue."), ("b", "Rewrite everything in assembly today.")]),
            design,
            &pair,
            &pair,
        )
        .await
        .map_err(|e| e.to_string())?;
    if apart.divergence.score != 1.0 || apart.document.recommendation != Recommendation::Comparison {
        return Err(format!("disjoint outputs: divergence {}", apart.divergence.score));
    }
    Ok(format!("golden fixture, 3 runs, divergence {:.6}", outputs[0].divergence.score))
}
