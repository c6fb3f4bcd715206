//! Splitting a model output into named blocks of semantic units.

use serde::{Deserialize, Serialize};
use unicode_segmentation::UnicodeSegmentation;

use crate::domain::{ModelId, OTHER_BLOCK};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Granularity {
    Paragraph,
    #[default]
    Sentence,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SegmentedBlock {
    pub name: String,
    pub units: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SegmentedOutput {
    pub model: ModelId,
    pub blocks: Vec<SegmentedBlock>,
}

impl SegmentedOutput {
    pub fn unit_count(&self) -> usize {
        self.blocks.iter().map(|b| b.units.len()).sum()
    }

    pub fn unit(&self, block: usize, unit: usize) -> Option<&str> {
        self.blocks.get(block)?.units.get(unit).map(String::as_str)
    }
}

/// Collapses all whitespace runs to single spaces.
pub fn squash_whitespace(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn heading(line: &str) -> Option<&str> {
    let trimmed = line.trim_start();
    let hashes = trimmed.bytes().take_while(|b| *b == b'#').count();
    if (1..=6).contains(&hashes) {
        let rest = &trimmed[hashes..];
        if rest.starts_with(' ') || rest.is_empty() {
            return Some(rest.trim().trim_end_matches('#').trim());
        }
    }
    None
}

fn is_list_item(line: &str) -> bool {
    let t = line.trim_start();
    if let Some(rest) = t.strip_prefix(['-', '*', '+']) {
        return rest.starts_with(' ');
    }
    let digits = t.bytes().take_while(u8::is_ascii_digit).count();
    let rest = &t[digits..];
    digits > 0 && (rest.starts_with(". ") || rest.starts_with(") "))
}

/// Maps a heading to a template block name, or the overflow block.
pub fn block_name_for(heading: &str, template: &[String]) -> String {
    let h = heading.trim().trim_end_matches(':').trim();
    template
        .iter()
        .find(|name| name.eq_ignore_ascii_case(h))
        .cloned()
        .unwrap_or_else(|| OTHER_BLOCK.to_owned())
}

fn paragraph_units(lines: &[&str], granularity: Granularity, out: &mut Vec<String>) {
    if lines.is_empty() {
        return;
    }
    if granularity == Granularity::Paragraph {
        out.push(lines.iter().map(|l| l.trim()).collect::<Vec<_>>().join("\n"));
        return;
    }
    let mut prose: Vec<&str> = Vec::new();
    let mut item: Option<String> = None;
    let flush_prose = |prose: &mut Vec<&str>, out: &mut Vec<String>| {
        if prose.is_empty() {
            return;
        }
        let joined = prose.iter().map(|l| l.trim()).collect::<Vec<_>>().join(" ");
        out.extend(
            joined
                .unicode_sentences()
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(str::to_owned),
        );
        prose.clear();
    };
    for line in lines {
        if is_list_item(line) {
            flush_prose(&mut prose, out);
            if let Some(done) = item.take() {
                out.push(done);
            }
            item = Some(line.trim().to_owned());
        } else if let Some(current) = item.as_mut() {
            current.push(' ');
            current.push_str(line.trim());
        } else {
            prose.push(line);
        }
    }
    if let Some(done) = item.take() {
        out.push(done);
    }
    flush_prose(&mut prose, out);
}

/// Rule-based structuring: markdown headings open blocks (named after the
/// matching template entry, else "Other"), blank lines separate paragraphs,
/// and paragraphs split into sentence or list-item units.
pub fn structure_deterministic(
    model: &ModelId,
    content: &str,
    template: &[String],
    granularity: Granularity,
) -> SegmentedOutput {
    let mut blocks = Vec::new();
    let mut name = OTHER_BLOCK.to_owned();
    let mut units = Vec::new();
    let mut paragraph: Vec<&str> = Vec::new();

    for line in content.lines() {
        if let Some(h) = heading(line) {
            paragraph_units(&paragraph, granularity, &mut units);
            paragraph.clear();
            if !units.is_empty() {
                blocks.push(SegmentedBlock { name: name.clone(), units: std::mem::take(&mut units) });
            }
            name = block_name_for(h, template);
        } else if line.trim().is_empty() {
            paragraph_units(&paragraph, granularity, &mut units);
            paragraph.clear();
        } else {
            paragraph.push(line);
        }
    }
    paragraph_units(&paragraph, granularity, &mut units);
    if !units.is_empty() {
        blocks.push(SegmentedBlock { name, units });
    }
    SegmentedOutput {
        model: model.clone(),
        blocks,
    }
}
