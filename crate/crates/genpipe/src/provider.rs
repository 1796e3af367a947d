use std::path::Path;

use serde::Deserialize;
use serde_json::{json, Value};
use thiserror::Error;

use crate::config::{ConfigError, ProviderConfig};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProviderError {
    /// Network failure, timeout, bad status or unreadable body. Retried.
    #[error("transport: {0}")]
    Transport(String),
    /// Not retried; aborts the session.
    #[error("configuration: {0}")]
    Config(String),
}

/// Single-turn text completion.
pub trait Provider {
    fn complete(&mut self, prompt: &str) -> Result<String, ProviderError>;
}

/// OpenAI-style chat completions endpoint with a bearer token.
pub struct HttpProvider {
    agent: ureq::Agent,
    endpoint: String,
    model: String,
    key: String,
}

impl HttpProvider {
    /// Fails before any network traffic if the credential is missing.
    pub fn new(cfg: &ProviderConfig) -> Result<Self, ConfigError> {
        cfg.validate()?;
        let key = cfg.credential()?;
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(cfg.timeout()))
            .build()
            .into();
        Ok(Self {
            agent,
            endpoint: cfg.endpoint_url.clone(),
            model: cfg.model_name.clone(),
            key,
        })
    }
}

impl Provider for HttpProvider {
    fn complete(&mut self, prompt: &str) -> Result<String, ProviderError> {
        let body = json!({
            "model": self.model,
            "messages": [{"role": "user", "content": prompt}],
        });
        let reply: Value = self
            .agent
            .post(&self.endpoint)
            .header("Authorization", &format!("Bearer {}", self.key))
            .send_json(&body)
            .map_err(|e| ProviderError::Transport(e.to_string()))?
            .body_mut()
            .read_json()
            .map_err(|e| ProviderError::Transport(e.to_string()))?;
        reply["choices"][0]["message"]["content"]
            .as_str()
            .map(str::to_string)
            .ok_or_else(|| ProviderError::Transport("response has no choices[0].message.content".into()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
#[serde(untagged)]
pub enum MockEntry {
    Text(String),
    Error { error: String },
}

#[derive(Deserialize)]
#[serde(untagged)]
enum Transcript {
    List(Vec<MockEntry>),
    Wrapped { responses: Vec<MockEntry> },
}

/// Replays canned responses in order and repeats the last one once the
/// transcript runs out. Also records every prompt it was given.
#[derive(Debug, Clone)]
pub struct MockProvider {
    entries: Vec<MockEntry>,
    next: usize,
    pub prompts: Vec<String>,
}

impl MockProvider {
    pub fn new(entries: Vec<MockEntry>) -> Result<Self, ConfigError> {
        if entries.is_empty() {
            return Err(ConfigError::Invalid("mock transcript is empty".into()));
        }
        Ok(Self {
            entries,
            next: 0,
            prompts: Vec::new(),
        })
    }

    pub fn from_texts<S: Into<String>>(texts: impl IntoIterator<Item = S>) -> Result<Self, ConfigError> {
        Self::new(texts.into_iter().map(|s| MockEntry::Text(s.into())).collect())
    }

    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let entries = match serde_json::from_str(text)? {
            Transcript::List(v) => v,
            Transcript::Wrapped { responses } => responses,
        };
        Self::new(entries)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn calls(&self) -> usize {
        self.prompts.len()
    }
}

impl Provider for MockProvider {
    fn complete(&mut self, prompt: &str) -> Result<String, ProviderError> {
        self.prompts.push(prompt.to_string());
        let entry = &self.entries[self.next.min(self.entries.len() - 1)];
        self.next += 1;
        match entry {
            MockEntry::Text(t) => Ok(t.clone()),
            MockEntry::Error { error } => Err(ProviderError::Transport(error.clone())),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn transcript_formats() {
        let mut a = MockProvider::from_json(r#"["one", {"error": "boom"}, "two"]"#).unwrap();
        assert_eq!(a.complete("p").unwrap(), "one");
        assert_eq!(a.complete("p"), Err(ProviderError::Transport("boom".into())));
        assert_eq!(a.complete("p").unwrap(), "two");
        assert_eq!(a.complete("p").unwrap(), "two");
        assert_eq!(a.calls(), 4);
        let mut b = MockProvider::from_json(r#"{"responses": ["x"]}"#).unwrap();
        assert_eq!(b.complete("p").unwrap(), "x");
        assert!(MockProvider::from_json("[]").is_err());
    }
}
