//! Content-addressed replay cache: one human-diffable JSON file per request.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{ChatRequest, LlmError};

/// A cached request/response pair as stored on disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CachedExchange {
    pub digest: String,
    pub request: ChatRequest,
    pub response: CachedResponse,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CachedResponse {
    pub text: String,
}

/// Directory of `cache/<digest>.json` files.
///
/// Writes are last-writer-wins; identical digests store identical content,
/// so concurrent writers are harmless. Credentials never appear in cache
/// files: the stored request carries no transport or key material.
#[derive(Debug, Clone)]
pub struct ReplayCache {
    dir: PathBuf,
}

impl ReplayCache {
    /// Opens (creating if needed) a cache directory.
    pub fn at(dir: impl Into<PathBuf>) -> Result<Self, LlmError> {
        let dir = dir.into();
        fs::create_dir_all(&dir).map_err(|source| LlmError::CacheIo {
            path: dir.clone(),
            source,
        })?;
        Ok(Self { dir })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn entry_path(&self, digest: &str) -> PathBuf {
        self.dir.join(format!("{digest}.json"))
    }

    pub fn contains(&self, digest: &str) -> bool {
        self.entry_path(digest).exists()
    }

    /// Number of cached exchanges.
    pub fn len(&self) -> usize {
        fs::read_dir(&self.dir)
            .map(|entries| {
                entries
                    .filter_map(|e| e.ok())
                    .filter(|e| e.path().extension().is_some_and(|x| x == "json"))
                    .count()
            })
            .unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, digest: &str) -> Result<Option<CachedExchange>, LlmError> {
        let path = self.entry_path(digest);
        let text = match fs::read_to_string(&path) {
            Ok(text) => text,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
            Err(source) => return Err(LlmError::CacheIo { path, source }),
        };
        let exchange: CachedExchange =
            serde_json::from_str(&text).map_err(|e| LlmError::InvalidResponse {
                message: format!("corrupt cache file {}: {e}", path.display()),
            })?;
        Ok(Some(exchange))
    }

    pub fn put(&self, request: &ChatRequest, text: &str) -> Result<(), LlmError> {
        let digest = request.digest();
        let exchange = CachedExchange {
            digest: digest.clone(),
            request: request.clone(),
            response: CachedResponse {
                text: text.to_string(),
            },
        };
        let path = self.entry_path(&digest);
        let mut json = serde_json::to_string_pretty(&exchange).expect("exchange serializes");
        json.push('\n');
        fs::write(&path, json).map_err(|source| LlmError::CacheIo { path, source })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::llm::{Conversation, ModelConfig};
    use crate::prompts::Message;

    #[test]
    fn put_get_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let cache = ReplayCache::at(dir.path()).unwrap();
        let config = ModelConfig::new("m", "http://localhost");
        let request = ChatRequest::new(&config, &Conversation::new(vec![Message::user("q")]));
        let digest = request.digest();
        assert!(cache.get(&digest).unwrap().is_none());
        cache.put(&request, "answer").unwrap();
        assert!(cache.contains(&digest));
        let cached = cache.get(&digest).unwrap().unwrap();
        assert_eq!(cached.response.text, "answer");
        assert_eq!(cached.request, request);
        assert_eq!(cache.len(), 1);
    }

    #[test]
    fn cache_files_are_human_diffable_json() {
        let dir = tempfile::tempdir().unwrap();
        let cache = ReplayCache::at(dir.path()).unwrap();
        let config = ModelConfig::new("m", "http://localhost");
        let request = ChatRequest::new(&config, &Conversation::new(vec![Message::user("q")]));
        cache.put(&request, "a").unwrap();
        let path = dir.path().join(format!("{}.json", request.digest()));
        let text = std::fs::read_to_string(path).unwrap();
        assert!(text.contains("\"digest\""));
        assert!(text.lines().count() > 5, "pretty-printed, one key per line");
    }
}
