//! Edits a fused document: switch a unit's variant, hide a unit, apply an
//! edit overlay, then export and round-trip the canonical JSON.
//!
//! ```bash
//! cargo run --example document_ops
//! ```

use polyfuse::document::{apply_op, export, list_hidden, DocOp, Direction, OpKind};
use polyfuse::domain::{
    decode_fusion_document, encode_fusion_document_string, validate_fusion_document, Block, FusionDocument, ModelId,
    Recommendation, TaskLabel, TaskMinor, Unit, Variant,
};
use polyfuse::taxonomy::Taxonomy;

fn variant(sources: &[&ModelId], content: &str) -> Variant {
    Variant { sources: sources.iter().map(|m| (*m).clone()).collect(), content: content.into() }
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (a, b) = (ModelId::new("a")?, ModelId::new("b")?);
    let mut doc = FusionDocument {
        task: TaskLabel::from_minor(TaskMinor::Explanation),
        recommendation: Recommendation::Fusion,
        reason: "hand-built".into(),
        participants: vec![a.clone(), b.clone()],
        blocks: vec![Block {
            name: "Other".into(),
            units: vec![
                Unit::new("", vec![variant(&[&a, &b], "Rust has no garbage collector.")]),
                Unit::new(
                    "",
                    vec![
                        variant(&[&a], "Ownership rules are checked at compile time."),
                        variant(&[&b], "The borrow checker enforces ownership while compiling."),
                    ],
                ),
                Unit::new("", vec![variant(&[&b], "It is fast.")]),
            ],
        }],
    };
    doc.renumber_units();
    let report = validate_fusion_document(&doc, &doc.participants, Taxonomy::builtin());
    println!("valid: {}", report.is_ok());

    for op in [
        DocOp::switch("u-0-1", Direction::Next),
        DocOp::new(OpKind::Hide, "u-0-2"),
        DocOp::edit("u-0-0", "Rust manages memory without a garbage collector."),
    ] {
        doc = apply_op(&doc, &op)?;
        println!("{:?} {} -> ok", op.op, op.unit);
    }
    match apply_op(&doc, &DocOp::switch("u-0-0", Direction::Next)) {
        Ok(_) => println!("unexpected"),
        Err(e) => println!("switch u-0-0 -> {e}"),
    }
    println!("hidden: {:?}", list_hidden(&doc));
    println!("\n{}\n", export(&doc));

    let json = encode_fusion_document_string(&doc);
    println!("{json}");
    assert_eq!(decode_fusion_document(json.as_bytes())?, doc);
    Ok(())
}
