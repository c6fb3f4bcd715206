use rand::rngs::StdRng;
use rand::SeedableRng;

use polyfuse::domain::{
    decode_fusion_document, encode_fusion_document, validate_fusion_document, FusionDocument, Recommendation, UnitStatus,
    ViolationKind,
};
use polyfuse::taxonomy::Taxonomy;

use crate::common::{id, registry, valid_document};

fn string(out: &mut String, s: &str) {
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            '\u{8}' => out.push_str("\\b"),
            '\u{c}' => out.push_str("\\f"),
            c if (c as u32) < 0x20 => out.push_str(&format!("\\u{:04x}", c as u32)),
            c => out.push(c),
        }
    }
    out.push('"');
}

fn list<T>(out: &mut String, items: &[T], mut each: impl FnMut(&mut String, &T)) {
    out.push('[');
    for (i, item) in items.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        each(out, item);
    }
    out.push(']');
}

/// Hand-written canonical encoding: fixed key order, compact, serde-style escapes.
fn oracle_encode(doc: &FusionDocument) -> String {
    let mut o = String::new();
    o.push_str("{\"task\":{\"major\":");
    string(&mut o, doc.task.major().as_str());
    o.push_str(",\"minor\":");
    string(&mut o, doc.task.minor().as_str());
    o.push_str("},\"recommendation\":");
    string(&mut o, match doc.recommendation {
        Recommendation::Fusion => "fusion",
        Recommendation::Comparison => "comparison",
    });
    o.push_str(",\"reason\":");
    string(&mut o, &doc.reason);
    o.push_str(",\"participants\":");
    list(&mut o, &doc.participants, |o, p| string(o, p.as_str()));
    o.push_str(",\"blocks\":");
    list(&mut o, &doc.blocks, |o, b| {
        o.push_str("{\"name\":");
        string(o, &b.name);
        o.push_str(",\"units\":");
        list(o, &b.units, |o, u| {
            o.push_str("{\"id\":");
            string(o, &u.id);
            o.push_str(",\"status\":");
            string(o, if u.status == UnitStatus::Hidden { "hidden" } else { "visible" });
            o.push_str(&format!(",\"active_variant\":{}", u.active_variant));
            o.push_str(",\"edited\":");
            match &u.edited {
                Some(t) => string(o, t),
                None => o.push_str("null"),
            }
            o.push_str(",\"variants\":");
            list(o, &u.variants, |o, v| {
                o.push_str("{\"sources\":");
                list(o, &v.sources, |o, s| string(o, s.as_str()));
                o.push_str(",\"content\":");
                string(o, &v.content);
                o.push('}');
            });
            o.push('}');
        });
        o.push('}');
    });
    o.push('}');
    o
}

fn seed(doc: &FusionDocument, kind: ViolationKind) -> FusionDocument {
    use ViolationKind::*;
    let mut d = doc.clone();
    let outsider = registry().into_iter().find(|m| !d.participants.contains(m)).unwrap_or_else(|| id("outsider"));
    let first = d.participants[0].clone();
    let unit = &mut d.blocks[0].units[0];
    match kind {
        UnregisteredParticipant => d.participants.push(id("nobody")),
        DuplicateParticipant => d.participants.push(first),
        UnknownBlockName => d.blocks[0].name = "Appendix".into(),
        EmptyVariants => unit.variants.clear(),
        ActiveVariantOutOfRange => unit.active_variant = unit.variants.len(),
        DuplicateUnitId => {
            let copy = unit.clone();
            d.blocks[0].units.push(copy);
        }
        EmptyEdit => unit.edited = Some(String::new()),
        EmptySources => unit.variants[0].sources.clear(),
        DuplicateSource => {
            let s = unit.variants[0].sources[0].clone();
            unit.variants[0].sources.push(s);
        }
        UnknownSource => unit.variants[0].sources.push(outsider),
        EmptyContent => unit.variants[0].content.clear(),
        DuplicateSourceSet => {
            let v = unit.variants[0].clone();
            unit.variants.push(v);
        }
    }
    d
}

const KINDS: [ViolationKind; 12] = [
    ViolationKind::UnregisteredParticipant,
    ViolationKind::DuplicateParticipant,
    ViolationKind::UnknownBlockName,
    ViolationKind::EmptyVariants,
    ViolationKind::ActiveVariantOutOfRange,
    ViolationKind::DuplicateUnitId,
    ViolationKind::EmptyEdit,
    ViolationKind::EmptySources,
    ViolationKind::DuplicateSource,
    ViolationKind::UnknownSource,
    ViolationKind::EmptyContent,
    ViolationKind::DuplicateSourceSet,
];

pub fn run() -> Result<String, String> {
    let mut rng = StdRng::seed_from_u64(43);
    let taxonomy = Taxonomy::builtin();
    let registry = registry();
    let mut seeded = 0;
    for case in 0..1000 {
        let doc = valid_document(&mut rng);
        let report = validate_fusion_document(&doc, &registry, taxonomy);
        if !report.is_ok() {
            return Err(format!("case {case}: generated document invalid: {report}"));
        }
        let bytes = encode_fusion_document(&doc);
        if bytes != oracle_encode(&doc).as_bytes() {
            return Err(format!("case {case}: encoding differs from canonical oracle"));
        }
        let back = decode_fusion_document(&bytes).map_err(|e| format!("case {case}: {e}"))?;
        if back != doc || encode_fusion_document(&back) != bytes {
            return Err(format!("case {case}: round trip changed the document"));
        }
        if doc.blocks.is_empty() {
            continue;
        }
        for kind in KINDS {
            let bad = seed(&doc, kind);
            if !validate_fusion_document(&bad, &registry, taxonomy).has(kind) {
                return Err(format!("case {case}: seeded {kind:?} not reported"));
            }
            seeded += 1;
        }
    }

    let good = String::from_utf8(encode_fusion_document(&valid_document(&mut rng))).unwrap();
    let rejects = [
        good.replacen("{\"task\"", "{\"extra\":1,\"task\"", 1),
        good.replacen("\"minor\":\"", "\"minor\":\"x", 1),
        good.replacen("\"recommendation\":\"", "\"recommendation\":\"x", 1),
        format!("{good} junk"),
        good[..good.len() - 1].to_owned(),
        r#"{"task":{"major":"content_generation","minor":"information_query"},"recommendation":"fusion","reason":"","participants":[],"blocks":[]}"#.to_owned(),
    ];
    for (i, bad) in rejects.iter().enumerate() {
        if decode_fusion_document(bad.as_bytes()).is_ok() {
            return Err(format!("malformed input {i} decoded"));
        }
    }
    Ok(format!("1000 round trips, {seeded} seeded violations, {} malformed inputs rejected", rejects.len()))
}
