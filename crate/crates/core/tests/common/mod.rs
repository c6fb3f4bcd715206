#![allow(dead_code)]

use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::Rng;

use polyfuse::domain::{unit_id, Block, FusionDocument, ModelId, Recommendation, TaskLabel, TaskMinor, Unit, UnitStatus, Variant, OTHER_BLOCK};
use polyfuse::taxonomy::Taxonomy;

pub const POOL: [&str; 6] = ["alpha", "beta", "gamma", "delta", "eps", "zeta"];

pub fn id(s: &str) -> ModelId {
    ModelId::new(s).unwrap()
}

pub fn registry() -> Vec<ModelId> {
    POOL.iter().map(|s| id(s)).collect()
}

const WORDS: [&str; 24] = [
    "the", "tower", "is", "tall", "paris", "iron", "built", "in", "1889", "a", "landmark", "visit", "many", "people",
    "year", "metres", "fair", "world", "famous", "city", "river", "old", "new", "view",
];

pub fn sentence(rng: &mut StdRng, min: usize, max: usize) -> String {
    let n = rng.gen_range(min..=max);
    let words: Vec<&str> = (0..n).map(|_| *WORDS.choose(rng).unwrap()).collect();
    let mut s = words.join(" ");
    if let Some(first) = s.get_mut(0..1) {
        first.make_ascii_uppercase();
    }
    s.push('.');
    s
}

/// Text with characters that need escaping in JSON.
pub fn awkward_text(rng: &mut StdRng) -> String {
    let extras = ["\"quoted\"", "back\\slash", "line\nbreak", "tab\there", "é", "日本", "🙂", "\u{1}", "</script>"];
    let mut s = sentence(rng, 1, 6);
    if rng.gen_bool(0.5) {
        s.push(' ');
        s.push_str(extras.choose(rng).unwrap());
    }
    s
}

/// A random document that passes validation against [`registry`].
pub fn valid_document(rng: &mut StdRng) -> FusionDocument {
    let minor = *TaskMinor::ALL.choose(rng).unwrap();
    let task = TaskLabel::from_minor(minor);
    let mut participants = registry();
    participants.shuffle(rng);
    participants.truncate(rng.gen_range(1..=4));

    let template = Taxonomy::builtin().block_template(task.major()).to_vec();
    let mut names: Vec<String> = template.clone();
    names.push(OTHER_BLOCK.to_owned());
    let mut blocks = Vec::new();
    for name in names {
        if !rng.gen_bool(0.5) {
            continue;
        }
        let units = (0..rng.gen_range(1..=4))
            .map(|_| {
                let mut sets: Vec<Vec<ModelId>> = Vec::new();
                for _ in 0..rng.gen_range(1..=3) {
                    let mut set = participants.clone();
                    set.shuffle(rng);
                    set.truncate(rng.gen_range(1..=participants.len()));
                    let mut sorted = set.clone();
                    sorted.sort();
                    if sets.iter().all(|s| {
                        let mut other = s.clone();
                        other.sort();
                        other != sorted
                    }) {
                        sets.push(set);
                    }
                }
                let variants: Vec<Variant> = sets
                    .into_iter()
                    .map(|sources| Variant { sources, content: awkward_text(rng) })
                    .collect();
                let mut unit = Unit::new("", variants);
                unit.active_variant = rng.gen_range(0..unit.variants.len());
                if rng.gen_bool(0.3) {
                    unit.status = UnitStatus::Hidden;
                }
                if rng.gen_bool(0.3) {
                    unit.edited = Some(awkward_text(rng));
                }
                unit
            })
            .collect();
        blocks.push(Block { name, units });
    }
    let mut doc = FusionDocument {
        task,
        recommendation: if rng.gen_bool(0.8) { Recommendation::Fusion } else { Recommendation::Comparison },
        reason: awkward_text(rng),
        participants,
        blocks,
    };
    doc.renumber_units();
    doc
}

pub fn unit_ids(doc: &FusionDocument) -> Vec<String> {
    doc.units().map(|u| u.id.clone()).collect()
}

pub fn first_unit_id() -> String {
    unit_id(0, 0)
}
