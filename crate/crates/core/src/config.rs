//! Application config file (JSON). Relative paths resolve against the
//! directory holding the config file.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::domain::ModelId;
use crate::fusion::EngineConfig;
use crate::gateway::ProviderConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassifierEngine {
    #[default]
    Fallback,
    Llm,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassifierConfig {
    pub engine: ClassifierEngine,
    pub model: Option<ModelId>,
    /// Replacement for the bundled classifier prompt template.
    pub template: Option<PathBuf>,
}

fn default_listen() -> String {
    "127.0.0.1:8080".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AppConfig {
    pub providers: Vec<ProviderConfig>,
    /// Extra providers loaded from a `{"providers": [...]}` file.
    pub providers_file: Option<PathBuf>,
    /// Event log directory; absent keeps everything in memory.
    pub store_dir: Option<PathBuf>,
    /// Aggregate feedback counts added to the stored ratings.
    pub seed_table: Option<PathBuf>,
    pub snapshot_every: Option<u64>,
    pub taxonomy: Option<PathBuf>,
    pub criteria: Option<PathBuf>,
    pub prompts_dir: Option<PathBuf>,
    pub classifier: ClassifierConfig,
    pub fusion: EngineConfig,
    #[serde(default = "default_listen")]
    pub listen: String,
}

impl Default for AppConfig {
    fn default() -> Self {
        Self {
            providers: Vec::new(),
            providers_file: None,
            store_dir: None,
            seed_table: None,
            snapshot_every: None,
            taxonomy: None,
            criteria: None,
            prompts_dir: None,
            classifier: ClassifierConfig::default(),
            fusion: EngineConfig::default(),
            listen: default_listen(),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum AppConfigError {
    #[error("reading config {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("parsing config {path}: {source}")]
    Parse { path: PathBuf, source: serde_json::Error },
}

impl AppConfig {
    pub fn from_json(json: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(json)
    }

    pub fn load(path: &Path) -> Result<Self, AppConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| AppConfigError::Io {
            path: path.to_owned(),
            source,
        })?;
        let mut config = Self::from_json(&text).map_err(|source| AppConfigError::Parse {
            path: path.to_owned(),
            source,
        })?;
        if let Some(dir) = path.parent() {
            config.resolve_paths(dir);
        }
        Ok(config)
    }

    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut Option<PathBuf>| {
            if let Some(path) = p {
                if path.is_relative() {
                    *path = base.join(&*path);
                }
            }
        };
        fix(&mut self.providers_file);
        fix(&mut self.store_dir);
        fix(&mut self.seed_table);
        fix(&mut self.taxonomy);
        fix(&mut self.criteria);
        fix(&mut self.prompts_dir);
        fix(&mut self.classifier.template);
    }
}
