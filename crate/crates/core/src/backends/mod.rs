//! Answer providers: OpenAI-compatible HTTP services and a synthetic
//! biased model for validating the statistics end to end.

mod http;
mod mock;
mod ratelimit;

use std::collections::BTreeSet;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::corpus::HaystackConfig;
use crate::error::{Error, Result};
use crate::lang::LanguageCode;
use crate::util;

pub use http::{api_key_var, HttpBackend};
pub use mock::{mock_answer, BiasEntry, MockBackend, MockBiasSpec, REFUSAL_TEXT};
pub use ratelimit::RateLimiter;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BackendKind {
    ChatHttp,
    CompletionHttp,
    MockBiased,
}

/// Coarse provenance tag of a model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Origin {
    East,
    West,
    Other,
}

impl Origin {
    pub fn as_str(self) -> &'static str {
        match self {
            Origin::East => "east",
            Origin::West => "west",
            Origin::Other => "other",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Decoding {
    #[serde(default)]
    pub temperature: f64,
    #[serde(default = "default_max_tokens")]
    pub max_output_tokens: u32,
    /// Passed through verbatim as `reasoning_effort`.
    #[serde(default)]
    pub reasoning_effort: Option<String>,
}

impl Default for Decoding {
    fn default() -> Self {
        Self {
            temperature: 0.0,
            max_output_tokens: default_max_tokens(),
            reasoning_effort: None,
        }
    }
}

fn default_max_tokens() -> u32 {
    256
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RetryPolicy {
    #[serde(default = "default_attempts")]
    pub max_attempts: u32,
    #[serde(default = "default_backoff")]
    pub base_backoff_ms: u64,
    #[serde(default = "default_timeout")]
    pub timeout_secs: u64,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            max_attempts: default_attempts(),
            base_backoff_ms: default_backoff(),
            timeout_secs: default_timeout(),
        }
    }
}

fn default_attempts() -> u32 {
    5
}
fn default_backoff() -> u64 {
    1000
}
fn default_timeout() -> u64 {
    60
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BackendConfig {
    pub id: String,
    pub kind: BackendKind,
    #[serde(default)]
    pub endpoint_url: Option<String>,
    #[serde(default)]
    pub model: String,
    #[serde(default)]
    pub decoding: Decoding,
    /// Requests per minute; unlimited when absent.
    #[serde(default)]
    pub rate_limit: Option<u32>,
    #[serde(default)]
    pub retry: RetryPolicy,
    #[serde(default = "default_origin")]
    pub origin: Origin,
    #[serde(default)]
    pub mock: Option<MockBiasSpec>,
}

fn default_origin() -> Origin {
    Origin::Other
}

impl BackendConfig {
    pub fn validate(&self) -> Result<()> {
        let valid_id = !self.id.is_empty()
            && self
                .id
                .chars()
                .all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_' || c == '.');
        if !valid_id {
            return Err(Error::Config(format!(
                "backend id `{}` must be non-empty and use only [A-Za-z0-9._-]",
                self.id
            )));
        }
        if self.decoding.temperature.is_nan() || self.decoding.temperature < 0.0 {
            return Err(Error::Config(format!(
                "backend `{}`: temperature must be >= 0",
                self.id
            )));
        }
        if self.retry.max_attempts == 0 {
            return Err(Error::Config(format!(
                "backend `{}`: retry.max_attempts must be >= 1",
                self.id
            )));
        }
        match self.kind {
            BackendKind::ChatHttp | BackendKind::CompletionHttp => {
                if self.endpoint_url.is_none() {
                    return Err(Error::Config(format!(
                        "backend `{}`: endpoint_url is required for HTTP backends",
                        self.id
                    )));
                }
                if self.model.is_empty() {
                    return Err(Error::Config(format!("backend `{}`: model is required", self.id)));
                }
            }
            BackendKind::MockBiased => match &self.mock {
                Some(spec) => spec
                    .validate()
                    .map_err(|e| Error::Config(format!("backend `{}`: {e}", self.id)))?,
                None => {
                    return Err(Error::Config(format!(
                        "backend `{}`: mock-biased backends need a [backend.mock] table",
                        self.id
                    )))
                }
            },
        }
        Ok(())
    }

    /// Chat backends (and the mock) receive the chat prompt layout.
    pub fn uses_completion_prompt(&self) -> bool {
        self.kind == BackendKind::CompletionHttp
    }
}

/// The `[[backend]]` list of a backends file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BackendsFile {
    #[serde(rename = "backend", default)]
    pub backends: Vec<BackendConfig>,
}

impl BackendsFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = util::read_to_string(path)?;
        let file: BackendsFile = util::parse_toml(path, &text)?;
        file.validate()?;
        Ok(file)
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let file: BackendsFile = util::parse_toml(Path::new("<inline>"), text)?;
        file.validate()?;
        Ok(file)
    }

    fn validate(&self) -> Result<()> {
        let mut seen = BTreeSet::new();
        for backend in &self.backends {
            backend.validate()?;
            if !seen.insert(backend.id.as_str()) {
                return Err(Error::Config(format!("duplicate backend id `{}`", backend.id)));
            }
        }
        Ok(())
    }

    pub fn get(&self, id: &str) -> Option<&BackendConfig> {
        self.backends.iter().find(|b| b.id == id)
    }

    /// Restricts to `ids`, in the given order. Unknown ids are an error.
    pub fn select(&self, ids: &[String]) -> Result<Vec<BackendConfig>> {
        if ids.is_empty() {
            return Ok(self.backends.clone());
        }
        ids.iter()
            .map(|id| {
                self.get(id).cloned().ok_or_else(|| {
                    let known: Vec<&str> = self.backends.iter().map(|b| b.id.as_str()).collect();
                    Error::Config(format!(
                        "undefined backend id `{id}` (defined: {})",
                        known.join(", ")
                    ))
                })
            })
            .collect()
    }
}

/// Everything a backend may look at for one query.
#[derive(Debug, Clone, Copy)]
pub struct QueryRequest<'a> {
    pub text: &'a str,
    pub config: &'a HaystackConfig,
    /// First name of the role holder in this category.
    pub first_name: &'a str,
    pub prompt_lang: &'a LanguageCode,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Usage {
    #[serde(default)]
    pub prompt_tokens: Option<u64>,
    #[serde(default)]
    pub completion_tokens: Option<u64>,
}

/// Result of one query after retries. `error` is set when retries were
/// exhausted; the run records it and continues.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Reply {
    pub text: Option<String>,
    pub usage: Option<Usage>,
    pub attempts: u32,
    pub error: Option<String>,
}

pub trait Backend: Send + Sync {
    fn id(&self) -> &str;

    /// Only fatal conditions (bad credentials) are returned as `Err`.
    fn send(&self, request: &QueryRequest<'_>) -> Result<Reply>;
}

pub fn build_backend(config: &BackendConfig) -> Result<Arc<dyn Backend>> {
    config.validate()?;
    Ok(match config.kind {
        BackendKind::MockBiased => Arc::new(MockBackend::new(
            config.id.clone(),
            config.mock.clone().expect("validated"),
        )),
        BackendKind::ChatHttp | BackendKind::CompletionHttp => Arc::new(HttpBackend::new(config)?),
    })
}
