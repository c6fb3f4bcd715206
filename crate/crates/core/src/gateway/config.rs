use std::path::Path;

use serde::{Deserialize, Serialize};

use super::mock::MockScript;
use crate::domain::ModelId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProviderKind {
    OpenaiCompatible,
    Mock,
}

fn default_timeout() -> f64 {
    60.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProviderConfig {
    pub model: ModelId,
    pub kind: ProviderKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub endpoint: Option<String>,
    /// Environment variable holding the API key.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub auth_env: Option<String>,
    #[serde(default = "default_timeout")]
    pub timeout_s: f64,
    /// Model name sent upstream; defaults to the registry id.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub upstream_model: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mock: Option<MockScript>,
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("reading provider file: {0}")]
    Io(#[from] std::io::Error),
    #[error("parsing provider file: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("provider {model}: {reason}")]
    Invalid { model: ModelId, reason: String },
}

impl ProviderConfig {
    pub fn mock(model: ModelId, script: MockScript) -> Self {
        Self {
            model,
            kind: ProviderKind::Mock,
            endpoint: None,
            auth_env: None,
            timeout_s: default_timeout(),
            upstream_model: None,
            mock: Some(script),
        }
    }

    pub fn check(&self) -> Result<(), ConfigError> {
        let invalid = |reason: &str| ConfigError::Invalid {
            model: self.model.clone(),
            reason: reason.to_owned(),
        };
        if !(self.timeout_s > 0.0 && self.timeout_s.is_finite()) {
            return Err(invalid("timeout_s must be positive"));
        }
        if self.kind == ProviderKind::OpenaiCompatible && self.endpoint.is_none() {
            return Err(invalid("openai_compatible providers need an endpoint"));
        }
        Ok(())
    }
}

/// Provider file: `{"providers": [...]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProvidersFile {
    pub providers: Vec<ProviderConfig>,
}

impl ProvidersFile {
    pub fn from_json(json: &str) -> Result<Self, ConfigError> {
        let file: ProvidersFile = serde_json::from_str(json)?;
        for p in &file.providers {
            p.check()?;
        }
        Ok(file)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}
