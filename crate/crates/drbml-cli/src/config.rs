//! TOML configuration file with flag-overridable defaults.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::Context;
use drbml::llm::ModelConfig;
use serde::Deserialize;

/// On-disk configuration. Every value is optional; command-line flags win
/// over anything set here.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AppConfig {
    #[serde(default)]
    pub dataset: DatasetConfig,
    #[serde(default)]
    pub run: RunConfig,
    #[serde(default)]
    pub eval: EvalConfig,
    /// Model configurations keyed by alias for `--model`.
    #[serde(default)]
    pub models: BTreeMap<String, ModelConfig>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetConfig {
    pub dir: Option<PathBuf>,
    pub token_budget: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub runs_dir: Option<PathBuf>,
    pub cache_dir: Option<PathBuf>,
    pub parallelism: Option<usize>,
    pub templates_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalConfig {
    pub fold_k: Option<usize>,
    pub fold_seed: Option<u64>,
    pub indeterminate: Option<String>,
}

impl AppConfig {
    pub fn load(path: Option<&Path>) -> anyhow::Result<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config file {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("invalid config file {}", path.display()))
    }

    /// Resolves `--model`: a configured alias, or a bare model name.
    pub fn model(&self, alias_or_name: &str, endpoint: Option<&str>) -> ModelConfig {
        match self.models.get(alias_or_name) {
            Some(config) => {
                let mut config = config.clone();
                if let Some(endpoint) = endpoint {
                    config.endpoint = endpoint.to_string();
                }
                config
            }
            None => ModelConfig::new(alias_or_name, endpoint.unwrap_or_default()),
        }
    }
}
