//! Task-purpose taxonomy: majors, minors, the keyword fallback table and the
//! per-major block templates. Ships as a versioned JSON data file.

use std::collections::HashSet;
use std::path::Path;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::domain::{TaskLabel, TaskMajor, TaskMinor};

const BUILTIN: &str = include_str!("../assets/taxonomy.json");

#[derive(Debug, thiserror::Error)]
pub enum TaxonomyError {
    #[error("reading taxonomy file: {0}")]
    Io(#[from] std::io::Error),
    #[error("parsing taxonomy file: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("invalid taxonomy: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Taxonomy {
    pub version: u32,
    pub majors: Vec<MajorEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MajorEntry {
    pub id: TaskMajor,
    pub name: String,
    pub blocks: Vec<String>,
    pub minors: Vec<MinorEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinorEntry {
    pub id: TaskMinor,
    pub name: String,
    pub keywords: Vec<String>,
}

impl Taxonomy {
    /// The taxonomy bundled with the crate.
    pub fn builtin() -> &'static Taxonomy {
        static BUILTIN_TAXONOMY: OnceLock<Taxonomy> = OnceLock::new();
        BUILTIN_TAXONOMY
            .get_or_init(|| Taxonomy::from_json(BUILTIN).expect("bundled taxonomy is valid"))
    }

    pub fn from_json(json: &str) -> Result<Self, TaxonomyError> {
        let taxonomy: Taxonomy = serde_json::from_str(json)?;
        taxonomy.check()?;
        Ok(taxonomy)
    }

    pub fn load(path: &Path) -> Result<Self, TaxonomyError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    fn check(&self) -> Result<(), TaxonomyError> {
        let invalid = |msg: String| Err(TaxonomyError::Invalid(msg));
        let majors: Vec<TaskMajor> = self.majors.iter().map(|m| m.id).collect();
        if majors.len() != TaskMajor::ALL.len()
            || majors.iter().collect::<HashSet<_>>().len() != TaskMajor::ALL.len()
        {
            return invalid(format!("expected each of the {} majors once", TaskMajor::ALL.len()));
        }
        let mut minors = HashSet::new();
        for major in &self.majors {
            if major.blocks.is_empty() {
                return invalid(format!("major {} has an empty block template", major.id));
            }
            for minor in &major.minors {
                if minor.id.major() != major.id {
                    return invalid(format!("minor {} listed under {}", minor.id, major.id));
                }
                if !minors.insert(minor.id) {
                    return invalid(format!("minor {} listed twice", minor.id));
                }
                if minor.keywords.iter().all(|k| normalize(k).is_empty()) {
                    return invalid(format!("minor {} has no keywords", minor.id));
                }
            }
        }
        if minors.len() != TaskMinor::ALL.len() {
            return invalid(format!(
                "expected {} minors, found {}",
                TaskMinor::ALL.len(),
                minors.len()
            ));
        }
        Ok(())
    }

    pub fn major(&self, id: TaskMajor) -> &MajorEntry {
        self.majors
            .iter()
            .find(|m| m.id == id)
            .expect("checked taxonomy lists every major")
    }

    pub fn minor(&self, id: TaskMinor) -> &MinorEntry {
        self.major(id.major())
            .minors
            .iter()
            .find(|m| m.id == id)
            .expect("checked taxonomy lists every minor")
    }

    pub fn block_template(&self, major: TaskMajor) -> &[String] {
        &self.major(major).blocks
    }

    /// Minors in file order, used for tie-breaking.
    pub fn minors_in_order(&self) -> impl Iterator<Item = &MinorEntry> {
        self.majors.iter().flat_map(|m| m.minors.iter())
    }

    pub fn contains(&self, label: TaskLabel) -> bool {
        self.major(label.major()).minors.iter().any(|m| m.id == label.minor())
    }

    /// Human-readable listing embedded into the classifier prompt.
    pub fn describe(&self) -> String {
        let mut out = String::new();
        for major in &self.majors {
            out.push_str(&format!("- {} ({}):", major.id, major.name));
            for (i, minor) in major.minors.iter().enumerate() {
                let sep = if i == 0 { " " } else { ", " };
                out.push_str(&format!("{sep}{} ({})", minor.id, minor.name));
            }
            out.push('\n');
        }
        out
    }
}

/// Lowercases and reduces text to single-space separated alphanumeric tokens.
pub fn normalize(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for word in text
        .split(|c: char| !c.is_alphanumeric())
        .filter(|w| !w.is_empty())
    {
        if !out.is_empty() {
            out.push(' ');
        }
        out.extend(word.chars().flat_map(char::to_lowercase));
    }
    out
}
