use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};

use polyfuse::document::{apply_op, clear_edit, edit_unit, export, set_hidden, switch_variant, DocError, DocOp, Direction, OpKind};
use polyfuse::domain::{FusionDocument, UnitStatus};

use crate::common::{awkward_text, unit_ids, valid_document};

fn oracle_export(doc: &FusionDocument) -> String {
    let mut parts: Vec<String> = Vec::new();
    for block in &doc.blocks {
        for unit in &block.units {
            if unit.status == UnitStatus::Hidden {
                continue;
            }
            parts.push(match &unit.edited {
                Some(t) => t.clone(),
                None => unit.variants[unit.active_variant].content.clone(),
            });
        }
    }
    parts.join("\n\n")
}

fn ok(r: Result<FusionDocument, DocError>) -> Result<FusionDocument, String> {
    r.map_err(|e| e.to_string())
}

pub fn run() -> Result<String, String> {
    let mut rng = StdRng::seed_from_u64(31);
    let mut docs = 0;
    let mut checks = 0usize;
    while docs < 1000 {
        let doc = valid_document(&mut rng);
        let ids = unit_ids(&doc);
        if ids.is_empty() {
            continue;
        }
        docs += 1;
        if export(&doc) != oracle_export(&doc) {
            return Err(format!("doc {docs}: export differs from oracle"));
        }
        for uid in &ids {
            let unit = doc.unit(uid).unwrap().clone();

            let toggled = if unit.is_visible() {
                ok(set_hidden(&ok(set_hidden(&doc, uid, true))?, uid, false))?
            } else {
                ok(set_hidden(&ok(set_hidden(&doc, uid, false))?, uid, true))?
            };
            if toggled != doc {
                return Err(format!("doc {docs}: hide/show on {uid} is not an involution"));
            }
            let hidden = ok(set_hidden(&doc, uid, true))?;
            if export(&hidden) != oracle_export(&hidden) || hidden.unit(uid).unwrap().is_visible() {
                return Err(format!("doc {docs}: hidden {uid} still exported"));
            }

            let n = unit.variants.len();
            if n < 2 {
                if switch_variant(&doc, uid, Direction::Next) != Err(DocError::SingleVariant(uid.clone())) {
                    return Err(format!("doc {docs}: switching single-variant {uid} did not fail"));
                }
            } else {
                let mut cycled = doc.clone();
                for _ in 0..n {
                    cycled = ok(switch_variant(&cycled, uid, Direction::Next))?;
                }
                let there_and_back = ok(switch_variant(&ok(switch_variant(&doc, uid, Direction::Next))?, uid, Direction::Prev))?;
                let back_and_there = ok(switch_variant(&ok(switch_variant(&doc, uid, Direction::Prev))?, uid, Direction::Next))?;
                if cycled != doc || there_and_back != doc || back_and_there != doc {
                    return Err(format!("doc {docs}: switch cycle on {uid} is not the identity"));
                }
                let next = ok(switch_variant(&doc, uid, Direction::Next))?;
                if next.unit(uid).unwrap().active_variant != (unit.active_variant + 1) % n
                    || export(&next) != oracle_export(&next)
                {
                    return Err(format!("doc {docs}: switch on {uid} moved to the wrong variant"));
                }
            }

            let text = awkward_text(&mut rng);
            let edited = ok(edit_unit(&doc, uid, &text))?;
            if edited.unit(uid).unwrap().variants != unit.variants || export(&edited) != oracle_export(&edited) {
                return Err(format!("doc {docs}: edit on {uid} touched variants or export"));
            }
            let mut expected = doc.clone();
            expected.unit_mut(uid).unwrap().edited = None;
            if ok(clear_edit(&edited, uid))? != expected {
                return Err(format!("doc {docs}: edit then clear on {uid} did not restore"));
            }
            if unit.edited.is_none() && ok(clear_edit(&edited, uid))? != doc {
                return Err(format!("doc {docs}: edit then clear is not the identity"));
            }
            if edit_unit(&doc, uid, "") != Err(DocError::EmptyText) {
                return Err(format!("doc {docs}: empty edit accepted"));
            }
            checks += 6;
        }

        // random op sequences through the wire form agree with the oracle
        let mut cur = doc.clone();
        for _ in 0..8 {
            let uid = ids.choose(&mut rng).unwrap().clone();
            let op = match rng.gen_range(0..5) {
                0 => DocOp::switch(uid, if rng.gen_bool(0.5) { Direction::Next } else { Direction::Prev }),
                1 => DocOp::new(OpKind::Hide, uid),
                2 => DocOp::new(OpKind::Show, uid),
                3 => DocOp::edit(uid, awkward_text(&mut rng)),
                _ => DocOp::new(OpKind::ClearEdit, uid),
            };
            if let Ok(next) = apply_op(&cur, &op) {
                cur = next;
            }
            if export(&cur) != oracle_export(&cur) {
                return Err(format!("doc {docs}: export differs from oracle after {op:?}"));
            }
        }
        if !matches!(apply_op(&doc, &DocOp::new(OpKind::Hide, "u-99-99")), Err(DocError::UnknownUnit(_))) {
            return Err("unknown unit accepted".into());
        }
    }
    Ok(format!("{docs} documents, {checks} unit checks"))
}
