//! Execution of prompts against pluggable chat-completion backends.

mod backend;
mod cache;
mod runner;

pub use backend::{
    Backend, BackendReply, HttpChatBackend, MockBackend, OracleBackend, OracleMode, OracleSchema,
    ReplayBackend,
};
pub use cache::{CachedExchange, ReplayCache};
pub use runner::{BatchItem, ChainMode, RequestBudget, Runner};

use std::collections::BTreeMap;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::prompts::{Message, PromptError, Strategy};

#[derive(Debug, Error)]
pub enum LlmError {
    #[error("transport failure after {attempts} attempt(s): {message}")]
    Transport { message: String, attempts: u32 },
    #[error("authentication failure: {message}")]
    Auth { message: String },
    #[error("no cached or scripted response for request digest {digest}")]
    CacheMiss { digest: String },
    #[error("request budget of {limit} exhausted")]
    BudgetExceeded { limit: usize },
    #[error("backend rejected the request (status {status}): {message}")]
    Api { status: u16, message: String },
    #[error("malformed backend response: {message}")]
    InvalidResponse { message: String },
    #[error("invalid model configuration: {message}")]
    InvalidConfig { message: String },
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error("cache I/O failure at {path}: {source}")]
    CacheIo {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl LlmError {
    /// Transient failures are worth retrying; everything else is not.
    pub fn is_transient(&self) -> bool {
        matches!(self, LlmError::Transport { .. })
    }
}

/// Model and decoding settings for one backend.
///
/// Credentials are referenced by environment variable name and resolved at
/// request time, never stored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub model_name: String,
    pub endpoint: String,
    #[serde(default)]
    pub temperature: f64,
    #[serde(default = "default_max_output_tokens")]
    pub max_output_tokens: u32,
    #[serde(default = "default_request_timeout_ms")]
    pub request_timeout_ms: u64,
    #[serde(default = "default_max_retries")]
    pub max_retries: u32,
    #[serde(default = "default_retry_backoff_ms")]
    pub retry_backoff_ms: u64,
    /// Name of the environment variable holding the API key.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub api_key_ref: Option<String>,
    /// Extra decoding parameters merged into the request body.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub extra_params: BTreeMap<String, serde_json::Value>,
    /// Dotted path to the generated text in the response JSON, for
    /// endpoints that do not use the `choices.0.message.content` shape.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub response_text_path: Option<String>,
}

fn default_max_output_tokens() -> u32 {
    1024
}

fn default_request_timeout_ms() -> u64 {
    60_000
}

fn default_max_retries() -> u32 {
    3
}

fn default_retry_backoff_ms() -> u64 {
    250
}

pub const MAX_RETRY_LIMIT: u32 = 10;

impl ModelConfig {
    pub fn new(model_name: impl Into<String>, endpoint: impl Into<String>) -> Self {
        Self {
            model_name: model_name.into(),
            endpoint: endpoint.into(),
            temperature: 0.0,
            max_output_tokens: default_max_output_tokens(),
            request_timeout_ms: default_request_timeout_ms(),
            max_retries: default_max_retries(),
            retry_backoff_ms: default_retry_backoff_ms(),
            api_key_ref: None,
            extra_params: BTreeMap::new(),
            response_text_path: None,
        }
    }

    pub fn validate(&self) -> Result<(), LlmError> {
        if self.model_name.is_empty() {
            return Err(LlmError::InvalidConfig {
                message: "model_name must not be empty".to_string(),
            });
        }
        if !(self.temperature >= 0.0 && self.temperature.is_finite()) {
            return Err(LlmError::InvalidConfig {
                message: format!("temperature must be finite and >= 0, got {}", self.temperature),
            });
        }
        if self.max_retries > MAX_RETRY_LIMIT {
            return Err(LlmError::InvalidConfig {
                message: format!("max_retries must be <= {MAX_RETRY_LIMIT}"),
            });
        }
        if self.max_output_tokens == 0 {
            return Err(LlmError::InvalidConfig {
                message: "max_output_tokens must be positive".to_string(),
            });
        }
        Ok(())
    }
}

/// An ordered chat exchange sent to a backend.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Conversation {
    pub messages: Vec<Message>,
}

impl Conversation {
    pub fn new(messages: Vec<Message>) -> Self {
        Self { messages }
    }

    pub fn push(&mut self, message: Message) {
        self.messages.push(message);
    }

    pub fn is_empty(&self) -> bool {
        self.messages.is_empty()
    }
}

impl From<Vec<Message>> for Conversation {
    fn from(messages: Vec<Message>) -> Self {
        Self { messages }
    }
}

/// The canonical request a backend answers: model, decoding parameters, and
/// the full message sequence. This is also the digest and cache-file schema;
/// transport details (endpoint, timeout, credentials) stay out.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub model_name: String,
    pub temperature: f64,
    pub max_output_tokens: u32,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub extra_params: BTreeMap<String, serde_json::Value>,
    pub messages: Vec<Message>,
}

impl ChatRequest {
    pub fn new(config: &ModelConfig, conversation: &Conversation) -> Self {
        Self {
            model_name: config.model_name.clone(),
            temperature: config.temperature,
            max_output_tokens: config.max_output_tokens,
            extra_params: config.extra_params.clone(),
            messages: conversation.messages.clone(),
        }
    }

    /// Stable content digest of the request.
    ///
    /// Struct fields serialize in declaration order and map-like parameters
    /// are sorted, so the digest is independent of construction order.
    pub fn digest(&self) -> String {
        let canonical = serde_json::to_vec(self).expect("request serializes");
        let mut hasher = Sha256::new();
        hasher.update(&canonical);
        hex::encode(hasher.finalize())
    }
}

/// A model's answer to one prompt run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawResponse {
    pub entry_id: u32,
    pub strategy: Strategy,
    pub model_name: String,
    /// Final answer text (for chains, the last step's output).
    pub text: String,
    /// Intermediate plus final texts for multi-step strategies.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chain_texts: Option<Vec<String>>,
    pub latency_ms: u64,
    pub cache_hit: bool,
    pub request_digest: String,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prompts::Message;

    #[test]
    fn digest_ignores_extra_param_insertion_order() {
        let conversation = Conversation::new(vec![Message::user("hi")]);
        let mut a = ModelConfig::new("m", "http://localhost");
        a.extra_params.insert("top_p".into(), serde_json::json!(0.9));
        a.extra_params.insert("seed".into(), serde_json::json!(7));
        let mut b = ModelConfig::new("m", "http://localhost");
        b.extra_params.insert("seed".into(), serde_json::json!(7));
        b.extra_params.insert("top_p".into(), serde_json::json!(0.9));
        assert_eq!(
            ChatRequest::new(&a, &conversation).digest(),
            ChatRequest::new(&b, &conversation).digest()
        );
    }

    #[test]
    fn digest_ignores_transport_settings() {
        let conversation = Conversation::new(vec![Message::user("hi")]);
        let a = ModelConfig::new("m", "http://one");
        let mut b = ModelConfig::new("m", "http://two");
        b.max_retries = 9;
        b.request_timeout_ms = 1;
        assert_eq!(
            ChatRequest::new(&a, &conversation).digest(),
            ChatRequest::new(&b, &conversation).digest()
        );
    }

    #[test]
    fn digest_sensitive_to_content() {
        let config = ModelConfig::new("m", "http://localhost");
        let a = ChatRequest::new(&config, &Conversation::new(vec![Message::user("one")]));
        let b = ChatRequest::new(&config, &Conversation::new(vec![Message::user("two")]));
        assert_ne!(a.digest(), b.digest());
        let mut warm = config.clone();
        warm.temperature = 0.7;
        let c = ChatRequest::new(&warm, &Conversation::new(vec![Message::user("one")]));
        assert_ne!(a.digest(), c.digest());
    }

    #[test]
    fn config_validation() {
        assert!(ModelConfig::new("m", "e").validate().is_ok());
        let mut bad = ModelConfig::new("m", "e");
        bad.temperature = -0.5;
        assert!(bad.validate().is_err());
        bad = ModelConfig::new("m", "e");
        bad.max_retries = 11;
        assert!(bad.validate().is_err());
        bad = ModelConfig::new("", "e");
        assert!(bad.validate().is_err());
    }
}
