//! Chat-completion backends: live HTTP, replay-from-cache, and mocks.

use std::collections::HashMap;
use std::time::Duration;

use serde_json::Value;

use super::{ChatRequest, LlmError, ModelConfig, ReplayCache};
use crate::corpus::DrbMlEntry;
use crate::prompts::Role;

/// One backend answer.
#[derive(Debug, Clone)]
pub struct BackendReply {
    pub text: String,
    /// True when the answer came from a persisted store rather than a model.
    pub cache_hit: bool,
}

/// A chat-completion provider.
pub trait Backend: Sync {
    fn name(&self) -> &str;
    fn complete(&self, request: &ChatRequest) -> Result<BackendReply, LlmError>;
}

const DEFAULT_TEXT_PATH: &str = "choices.0.message.content";

/// Live JSON chat-completion endpoint.
///
/// Sends the standard `{model, messages, temperature, max_tokens}` body and
/// reads the generated text at the configured response path. The API key is
/// resolved from the environment variable named in the config.
pub struct HttpChatBackend {
    client: reqwest::blocking::Client,
    endpoint: String,
    api_key: Option<String>,
    text_path: String,
}

impl HttpChatBackend {
    pub fn new(config: &ModelConfig) -> Result<Self, LlmError> {
        config.validate()?;
        if config.endpoint.is_empty() {
            return Err(LlmError::InvalidConfig {
                message: "http backend requires an endpoint".to_string(),
            });
        }
        let api_key = match &config.api_key_ref {
            Some(var) => Some(std::env::var(var).map_err(|_| LlmError::Auth {
                message: format!("environment variable {var} is not set"),
            })?),
            None => None,
        };
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_millis(config.request_timeout_ms))
            .build()
            .map_err(|e| LlmError::Transport {
                message: e.to_string(),
                attempts: 0,
            })?;
        Ok(Self {
            client,
            endpoint: config.endpoint.clone(),
            api_key,
            text_path: config
                .response_text_path
                .clone()
                .unwrap_or_else(|| DEFAULT_TEXT_PATH.to_string()),
        })
    }

    fn body(request: &ChatRequest) -> Value {
        let mut body = serde_json::json!({
            "model": request.model_name,
            "messages": request.messages,
            "temperature": request.temperature,
            "max_tokens": request.max_output_tokens,
        });
        for (key, value) in &request.extra_params {
            body[key] = value.clone();
        }
        body
    }
}

impl Backend for HttpChatBackend {
    fn name(&self) -> &str {
        "http"
    }

    fn complete(&self, request: &ChatRequest) -> Result<BackendReply, LlmError> {
        let mut call = self.client.post(&self.endpoint).json(&Self::body(request));
        if let Some(key) = &self.api_key {
            call = call.bearer_auth(key);
        }
        let response = call.send().map_err(|e| LlmError::Transport {
            message: e.to_string(),
            attempts: 1,
        })?;
        let status = response.status();
        if status.as_u16() == 401 || status.as_u16() == 403 {
            return Err(LlmError::Auth {
                message: format!("endpoint returned {status}"),
            });
        }
        if status.as_u16() == 429 || status.is_server_error() {
            return Err(LlmError::Transport {
                message: format!("endpoint returned {status}"),
                attempts: 1,
            });
        }
        if !status.is_success() {
            let message = response.text().unwrap_or_default();
            return Err(LlmError::Api {
                status: status.as_u16(),
                message: truncate(&message),
            });
        }
        let value: Value = response.json().map_err(|e| LlmError::InvalidResponse {
            message: e.to_string(),
        })?;
        let text = extract_path(&value, &self.text_path).ok_or_else(|| LlmError::InvalidResponse {
            message: format!("no text at response path `{}`", self.text_path),
        })?;
        Ok(BackendReply {
            text,
            cache_hit: false,
        })
    }
}

/// Walks a dotted path of object keys and array indices.
fn extract_path(value: &Value, path: &str) -> Option<String> {
    let mut current = value;
    for segment in path.split('.') {
        current = match segment.parse::<usize>() {
            Ok(index) => current.get(index)?,
            Err(_) => current.get(segment)?,
        };
    }
    current.as_str().map(|s| s.to_string())
}

fn truncate(s: &str) -> String {
    let mut out: String = s.chars().take(200).collect();
    if out.len() < s.len() {
        out.push('…');
    }
    out
}

/// Answers exclusively from a populated [`ReplayCache`].
pub struct ReplayBackend {
    cache: ReplayCache,
}

impl ReplayBackend {
    pub fn new(cache: ReplayCache) -> Self {
        Self { cache }
    }

    pub fn cache(&self) -> &ReplayCache {
        &self.cache
    }
}

impl Backend for ReplayBackend {
    fn name(&self) -> &str {
        "replay"
    }

    fn complete(&self, request: &ChatRequest) -> Result<BackendReply, LlmError> {
        let digest = request.digest();
        match self.cache.get(&digest)? {
            Some(exchange) => Ok(BackendReply {
                text: exchange.response.text,
                cache_hit: true,
            }),
            None => Err(LlmError::CacheMiss { digest }),
        }
    }
}

type Responder = dyn Fn(&ChatRequest) -> Option<String> + Send + Sync;

/// Deterministic scripted backend for tests and offline runs.
///
/// Answers from a digest-keyed script first, then from an optional
/// responder function; anything unscripted is a miss.
#[derive(Default)]
pub struct MockBackend {
    by_digest: HashMap<String, String>,
    responder: Option<Box<Responder>>,
}

impl MockBackend {
    pub fn new() -> Self {
        Self::default()
    }

    /// Scripts a response for one request digest.
    pub fn script(mut self, digest: impl Into<String>, text: impl Into<String>) -> Self {
        self.by_digest.insert(digest.into(), text.into());
        self
    }

    pub fn with_responder(
        f: impl Fn(&ChatRequest) -> Option<String> + Send + Sync + 'static,
    ) -> Self {
        Self {
            by_digest: HashMap::new(),
            responder: Some(Box::new(f)),
        }
    }
}

impl Backend for MockBackend {
    fn name(&self) -> &str {
        "mock"
    }

    fn complete(&self, request: &ChatRequest) -> Result<BackendReply, LlmError> {
        let digest = request.digest();
        if let Some(text) = self.by_digest.get(&digest) {
            return Ok(BackendReply {
                text: text.clone(),
                cache_hit: false,
            });
        }
        if let Some(responder) = &self.responder {
            if let Some(text) = responder(request) {
                return Ok(BackendReply {
                    text,
                    cache_hit: false,
                });
            }
        }
        Err(LlmError::CacheMiss { digest })
    }
}

/// Which answer shape the oracle emits.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OracleSchema {
    /// Bare `yes` / `no`.
    Basic,
    /// `"yes",` plus one JSON object per variable pair, or `no`.
    Advanced,
}

/// Whether the oracle tells the truth or inverts every answer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OracleMode {
    Truthful,
    Complement,
}

/// Ground-truth backend: looks up which entry a request is about by finding
/// its code in the prompt, then answers from the dataset labels.
pub struct OracleBackend {
    entries: Vec<DrbMlEntry>,
    schema: OracleSchema,
    mode: OracleMode,
}

impl OracleBackend {
    pub fn new(entries: Vec<DrbMlEntry>, schema: OracleSchema, mode: OracleMode) -> Self {
        Self {
            entries,
            schema,
            mode,
        }
    }

    fn answer(&self, entry: &DrbMlEntry) -> String {
        let race = match self.mode {
            OracleMode::Truthful => entry.has_race(),
            OracleMode::Complement => !entry.has_race(),
        };
        match (race, self.schema) {
            (false, _) => "no".to_string(),
            (true, OracleSchema::Basic) => "yes".to_string(),
            (true, OracleSchema::Advanced) => {
                let mut out = String::from("\"yes\",");
                for (i, pair) in entry.pairs_for_trimmed_code().iter().enumerate() {
                    let obj = serde_json::json!({
                        "data_race": 1,
                        "variable_names": pair.names,
                        "variable_locations": pair.lines,
                        "operation_types": pair.operations.map(|op| match op {
                            crate::corpus::Operation::Write => "write",
                            crate::corpus::Operation::Read => "read",
                        }),
                    });
                    out.push('\n');
                    out.push_str(&serde_json::to_string_pretty(&obj).unwrap());
                    if i + 1 < entry.pairs_for_trimmed_code().len() {
                        out.push(',');
                    }
                }
                out
            }
        }
    }
}

impl Backend for OracleBackend {
    fn name(&self) -> &str {
        match self.mode {
            OracleMode::Truthful => "mock-oracle",
            OracleMode::Complement => "mock-complement",
        }
    }

    fn complete(&self, request: &ChatRequest) -> Result<BackendReply, LlmError> {
        let entry = self.entries.iter().find(|e| {
            !e.trimmed_code.is_empty()
                && request
                    .messages
                    .iter()
                    .any(|m| m.role == Role::User && m.content.contains(&e.trimmed_code))
        });
        match entry {
            Some(entry) => Ok(BackendReply {
                text: self.answer(entry),
                cache_hit: false,
            }),
            None => Err(LlmError::CacheMiss {
                digest: request.digest(),
            }),
        }
    }
}
