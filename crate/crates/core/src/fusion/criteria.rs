//! Integration criteria and prompt templates for the LLM stages.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::domain::{TaskMajor, TaskMinor};
use crate::taxonomy::Taxonomy;

const BUILTIN_CRITERIA: &str = include_str!("../../assets/criteria.json");

#[derive(Debug, thiserror::Error)]
pub enum CriteriaError {
    #[error("reading criteria: {0}")]
    Io(#[from] std::io::Error),
    #[error("parsing criteria: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("no criteria text for {0}")]
    Missing(String),
}

/// Similarity criteria per major and per minor category.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CriteriaSet {
    pub majors: BTreeMap<TaskMajor, String>,
    pub minors: BTreeMap<TaskMinor, String>,
}

impl CriteriaSet {
    pub fn builtin() -> &'static CriteriaSet {
        static SET: OnceLock<CriteriaSet> = OnceLock::new();
        SET.get_or_init(|| serde_json::from_str(BUILTIN_CRITERIA).expect("bundled criteria parse"))
    }

    pub fn from_json(json: &str) -> Result<Self, CriteriaError> {
        Ok(serde_json::from_str(json)?)
    }

    pub fn load(path: &Path) -> Result<Self, CriteriaError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    /// Checks that every taxonomy entry has non-empty criteria text.
    pub fn check(&self, taxonomy: &Taxonomy) -> Result<(), CriteriaError> {
        for major in &taxonomy.majors {
            if self.majors.get(&major.id).is_none_or(|t| t.trim().is_empty()) {
                return Err(CriteriaError::Missing(major.id.to_string()));
            }
            for minor in &major.minors {
                if self.minors.get(&minor.id).is_none_or(|t| t.trim().is_empty()) {
                    return Err(CriteriaError::Missing(minor.id.to_string()));
                }
            }
        }
        Ok(())
    }

    pub fn major(&self, major: TaskMajor) -> &str {
        self.majors.get(&major).map_or("", String::as_str)
    }

    pub fn minor(&self, minor: TaskMinor) -> &str {
        self.minors.get(&minor).map_or("", String::as_str)
    }
}

/// Prompt templates used by the LLM structurer, aligner and enhancer.
#[derive(Debug, Clone, PartialEq)]
pub struct PromptSet {
    pub structure: String,
    pub align: BTreeMap<TaskMajor, String>,
    pub enhance: String,
}

impl Default for PromptSet {
    fn default() -> Self {
        let align = [
            (TaskMajor::ContentGeneration, include_str!("../../assets/prompts/align_content_generation.txt")),
            (TaskMajor::ContentEditing, include_str!("../../assets/prompts/align_content_editing.txt")),
            (TaskMajor::InformationRetrieval, include_str!("../../assets/prompts/align_information_retrieval.txt")),
            (TaskMajor::ProblemSolving, include_str!("../../assets/prompts/align_problem_solving.txt")),
            (TaskMajor::Other, include_str!("../../assets/prompts/align_other.txt")),
        ];
        Self {
            structure: include_str!("../../assets/prompts/structure.txt").to_owned(),
            align: align.into_iter().map(|(m, t)| (m, t.to_owned())).collect(),
            enhance: include_str!("../../assets/prompts/enhance.txt").to_owned(),
        }
    }
}

impl PromptSet {
    /// Loads templates from a directory laid out like the bundled assets;
    /// files that are absent keep their bundled text.
    pub fn load_dir(dir: &Path) -> std::io::Result<Self> {
        let mut set = Self::default();
        let read = |name: &str| -> std::io::Result<Option<String>> {
            match std::fs::read_to_string(dir.join(name)) {
                Ok(t) => Ok(Some(t)),
                Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
                Err(e) => Err(e),
            }
        };
        if let Some(t) = read("structure.txt")? {
            set.structure = t;
        }
        if let Some(t) = read("enhance.txt")? {
            set.enhance = t;
        }
        for major in TaskMajor::ALL {
            if let Some(t) = read(&format!("align_{}.txt", major.as_str()))? {
                set.align.insert(major, t);
            }
        }
        Ok(set)
    }

    pub fn align_for(&self, major: TaskMajor) -> &str {
        self.align.get(&major).map_or("", String::as_str)
    }
}
