use std::cmp::Ordering;
use std::collections::BTreeMap;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use polyfuse::dispatch::{plan, plan_from_scores};
use polyfuse::domain::{ModelId, TaskLabel, TaskMajor};
use polyfuse::store::PerformanceTable;

use crate::common::{id, POOL};

fn label(major: TaskMajor) -> TaskLabel {
    TaskLabel::from_minor(major.minors().next().unwrap())
}

/// (likes + 1) / (likes + dislikes + 2) compared exactly as fractions.
fn cmp_smoothed(a: (u64, u64), b: (u64, u64)) -> Ordering {
    let lhs = (a.0 + 1) as u128 * (b.0 + b.1 + 2) as u128;
    let rhs = (b.0 + 1) as u128 * (a.0 + a.1 + 2) as u128;
    lhs.cmp(&rhs)
}

fn expected_order(pins: &[ModelId], registry: &[ModelId], counts: &BTreeMap<ModelId, (u64, u64)>) -> Vec<ModelId> {
    let mut out: Vec<ModelId> = Vec::new();
    for p in pins {
        if !out.contains(p) {
            out.push(p.clone());
        }
    }
    let mut rest: Vec<&ModelId> = registry.iter().filter(|m| !out.contains(m)).collect();
    rest.sort_by(|a, b| cmp_smoothed(counts[*b], counts[*a]).then_with(|| a.cmp(b)));
    out.extend(rest.into_iter().cloned());
    out
}

pub fn run() -> Result<String, String> {
    let mut rng = StdRng::seed_from_u64(7);
    let mut cases = 0;
    for major in TaskMajor::ALL {
        let quota = if major == TaskMajor::ContentGeneration { 4 } else { 2 };
        for n in 1..=6 {
            let registry: Vec<ModelId> = POOL[..n].iter().map(|s| id(s)).collect();
            let mut pin_sets: Vec<Vec<ModelId>> = vec![vec![]];
            pin_sets.extend(registry.iter().map(|m| vec![m.clone()]));
            for i in 0..n {
                for j in (i + 1)..n {
                    pin_sets.push(vec![registry[j].clone(), registry[i].clone()]);
                }
            }
            for pins in pin_sets {
                cases += 1;
                // small count range forces ties between models
                let mut table = PerformanceTable::default();
                let mut counts = BTreeMap::new();
                for m in &registry {
                    let c = (rng.gen_range(0..3u64), rng.gen_range(0..3u64));
                    table.add(major, m, c.0, c.1);
                    counts.insert(m.clone(), c);
                }
                let got = plan(label(major), &pins, &table, &registry).map_err(|e| e.to_string())?;
                let want = expected_order(&pins, &registry, &counts);
                if got.models != want {
                    return Err(format!("{major} n={n} pins={pins:?}: order {:?}, expected {want:?}", got.models));
                }
                if got.auto_run_count != quota.min(n) {
                    return Err(format!("{major} n={n}: auto-run {} expected {}", got.auto_run_count, quota.min(n)));
                }
                for (i, p) in pins.iter().enumerate() {
                    if got.reasons[p] != "pinned by user" || got.models[i] != *p {
                        return Err(format!("{major} n={n}: pin {p} not in prefix"));
                    }
                }
                let scores: BTreeMap<ModelId, f64> = table
                    .scores(major, &registry)
                    .into_iter()
                    .map(|(m, s)| (m, s.normalized))
                    .collect();
                for factor in [0.25, 3.0, 1e6] {
                    let scaled: BTreeMap<ModelId, f64> = scores.iter().map(|(m, s)| (m.clone(), s * factor)).collect();
                    let p = plan_from_scores(label(major), &pins, &scaled, &registry, false).map_err(|e| e.to_string())?;
                    if p.models != got.models {
                        return Err(format!("{major} n={n}: scaling by {factor} changed the plan"));
                    }
                }
            }
        }
    }

    // untouched equals: lexicographic; one like lifts a model to the front
    let registry: Vec<ModelId> = ["c", "a", "b"].iter().map(|s| id(s)).collect();
    let mut table = PerformanceTable::default();
    let task = label(TaskMajor::ProblemSolving);
    let cold = plan(task, &[], &table, &registry).map_err(|e| e.to_string())?;
    if cold.models != [id("a"), id("b"), id("c")] {
        return Err(format!("cold start order {:?}", cold.models));
    }
    table.add(TaskMajor::ProblemSolving, &id("c"), 1, 0);
    let warm = plan(task, &[], &table, &registry).map_err(|e| e.to_string())?;
    if warm.models[0] != id("c") {
        return Err(format!("liked model not first: {:?}", warm.models));
    }
    if plan(task, &[id("zz")], &table, &registry).is_ok() {
        return Err("unregistered pin accepted".into());
    }
    cases += 3;
    Ok(format!("{cases} cases"))
}
