use std::path::Path;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("malformed config: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid config: {0}")]
    Invalid(String),
    #[error("environment variable {0} is not set")]
    MissingCredential(String),
}

/// Where to send prompts. The credential itself never lives in the file;
/// `api_key_ref` names the environment variable that holds it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct ProviderConfig {
    pub endpoint_url: String,
    pub model_name: String,
    pub api_key_ref: String,
    /// Seconds.
    pub timeout: u64,
    #[serde(default = "default_iterations")]
    pub max_iterations: usize,
}

fn default_iterations() -> usize {
    5
}

impl ProviderConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.max_iterations == 0 {
            return Err(ConfigError::Invalid("maxIterations must be at least 1".into()));
        }
        if self.timeout == 0 {
            return Err(ConfigError::Invalid("timeout must be positive".into()));
        }
        if self.endpoint_url.trim().is_empty() {
            return Err(ConfigError::Invalid("endpointUrl is empty".into()));
        }
        if self.api_key_ref.trim().is_empty() {
            return Err(ConfigError::Invalid("apiKeyRef is empty".into()));
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn timeout(&self) -> Duration {
        Duration::from_secs(self.timeout)
    }

    /// Looks up the credential without touching the network.
    pub fn credential(&self) -> Result<String, ConfigError> {
        match std::env::var(&self.api_key_ref) {
            Ok(v) if !v.is_empty() => Ok(v),
            _ => Err(ConfigError::MissingCredential(self.api_key_ref.clone())),
        }
    }
}
