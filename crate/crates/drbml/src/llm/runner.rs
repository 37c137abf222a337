//! Completion orchestration: retries, caching, chains, and batch dispatch.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use super::{Backend, ChatRequest, Conversation, LlmError, ModelConfig, RawResponse, ReplayCache};
use crate::corpus::DrbMlEntry;
use crate::prompts::{self, Message, Strategy, TemplateCatalog};

/// Caps the total number of backend requests in one run.
#[derive(Debug)]
pub struct RequestBudget {
    limit: usize,
    used: AtomicUsize,
}

impl RequestBudget {
    pub fn new(limit: usize) -> Self {
        Self {
            limit,
            used: AtomicUsize::new(0),
        }
    }

    pub fn used(&self) -> usize {
        self.used.load(Ordering::Relaxed)
    }

    fn try_acquire(&self) -> Result<(), LlmError> {
        let previous = self.used.fetch_add(1, Ordering::Relaxed);
        if previous >= self.limit {
            self.used.fetch_sub(1, Ordering::Relaxed);
            return Err(LlmError::BudgetExceeded { limit: self.limit });
        }
        Ok(())
    }
}

/// How the second chain step receives the first step's output.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum ChainMode {
    /// Follow-up user message in the same conversation, with the first
    /// answer present as an assistant turn.
    #[default]
    Conversational,
    /// First answer pasted into the second prompt's text, for backends
    /// without chat state.
    Interpolated,
}

/// One entry's outcome within a batch.
#[derive(Debug)]
pub struct BatchItem {
    pub entry_id: u32,
    pub outcome: Result<RawResponse, LlmError>,
}

/// Executes prompt strategies against one backend.
pub struct Runner<'a> {
    backend: &'a dyn Backend,
    config: &'a ModelConfig,
    catalog: &'a TemplateCatalog,
    cache: Option<&'a ReplayCache>,
    budget: Option<&'a RequestBudget>,
    chain_mode: ChainMode,
}

impl<'a> Runner<'a> {
    pub fn new(
        backend: &'a dyn Backend,
        config: &'a ModelConfig,
        catalog: &'a TemplateCatalog,
    ) -> Self {
        Self {
            backend,
            config,
            catalog,
            cache: None,
            budget: None,
            chain_mode: ChainMode::default(),
        }
    }

    /// Persist every fresh completion into `cache`.
    pub fn with_cache(mut self, cache: &'a ReplayCache) -> Self {
        self.cache = Some(cache);
        self
    }

    pub fn with_budget(mut self, budget: &'a RequestBudget) -> Self {
        self.budget = Some(budget);
        self
    }

    pub fn with_chain_mode(mut self, mode: ChainMode) -> Self {
        self.chain_mode = mode;
        self
    }

    /// Sends one conversation, retrying transient transport failures with
    /// exponential backoff up to `max_retries`. Fresh responses are written
    /// to the replay cache.
    pub fn complete(
        &self,
        entry_id: u32,
        strategy: Strategy,
        conversation: &Conversation,
    ) -> Result<RawResponse, LlmError> {
        self.config.validate()?;
        if conversation.is_empty() {
            return Err(LlmError::InvalidConfig {
                message: "conversation must not be empty".to_string(),
            });
        }
        let request = ChatRequest::new(self.config, conversation);
        let digest = request.digest();
        let start = Instant::now();
        let mut attempt: u32 = 0;
        loop {
            attempt += 1;
            if let Some(budget) = self.budget {
                budget.try_acquire()?;
            }
            match self.backend.complete(&request) {
                Ok(reply) => {
                    if let (Some(cache), false) = (self.cache, reply.cache_hit) {
                        cache.put(&request, &reply.text)?;
                    }
                    return Ok(RawResponse {
                        entry_id,
                        strategy,
                        model_name: self.config.model_name.clone(),
                        text: reply.text,
                        chain_texts: None,
                        latency_ms: start.elapsed().as_millis() as u64,
                        cache_hit: reply.cache_hit,
                        request_digest: digest,
                    });
                }
                Err(e) if e.is_transient() && attempt <= self.config.max_retries => {
                    std::thread::sleep(backoff_delay(self.config.retry_backoff_ms, attempt));
                }
                Err(LlmError::Transport { message, .. }) => {
                    return Err(LlmError::Transport {
                        message,
                        attempts: attempt,
                    })
                }
                Err(e) => return Err(e),
            }
        }
    }

    /// Runs one strategy over one entry.
    ///
    /// Single-prompt strategies issue one completion. `Ap2` completes the
    /// dependence-analysis step, then the detection step with the first
    /// answer carried per [`ChainMode`]; a first-step failure aborts the
    /// chain. Fine-tuning strategies send their training prompt as-is, which
    /// is how fine-tuned models are evaluated.
    pub fn run_strategy(
        &self,
        entry: &DrbMlEntry,
        strategy: Strategy,
    ) -> Result<RawResponse, LlmError> {
        match strategy {
            Strategy::Bp1 | Strategy::Bp2 | Strategy::Ap1 => {
                let instances = prompts::render(strategy, entry, self.catalog)?;
                let conversation = Conversation::new(instances[0].messages.clone());
                self.complete(entry.id, strategy, &conversation)
            }
            Strategy::BasicFt | Strategy::AdvancedFt => {
                let pair = prompts::make_ft_pairs(entry, strategy, self.catalog)?;
                let conversation = Conversation::new(vec![Message::user(pair.prompt)]);
                self.complete(entry.id, strategy, &conversation)
            }
            Strategy::Ap2 => {
                let instances = prompts::render(strategy, entry, self.catalog)?;
                let chain1 = Conversation::new(instances[0].messages.clone());
                let first = self.complete(entry.id, strategy, &chain1)?;
                let chain2_text = instances[1].messages[0].content.clone();
                let chain2 = match self.chain_mode {
                    ChainMode::Conversational => {
                        let mut messages = instances[0].messages.clone();
                        messages.push(Message::assistant(first.text.clone()));
                        messages.push(Message::user(chain2_text));
                        Conversation::new(messages)
                    }
                    ChainMode::Interpolated => Conversation::new(vec![Message::user(format!(
                        "{chain2_text}\n\n{}",
                        first.text
                    ))]),
                };
                let second = self.complete(entry.id, strategy, &chain2)?;
                Ok(RawResponse {
                    entry_id: entry.id,
                    strategy,
                    model_name: second.model_name.clone(),
                    text: second.text.clone(),
                    chain_texts: Some(vec![first.text, second.text]),
                    latency_ms: first.latency_ms + second.latency_ms,
                    cache_hit: first.cache_hit && second.cache_hit,
                    request_digest: second.request_digest,
                })
            }
        }
    }

    /// Runs a strategy over every entry with bounded parallelism.
    ///
    /// Results come back ordered by entry id regardless of completion
    /// order; per-entry failures are recorded, never aborting the batch.
    pub fn run_batch(
        &self,
        entries: &[DrbMlEntry],
        strategy: Strategy,
        parallelism: usize,
    ) -> Vec<BatchItem> {
        let mut sorted: Vec<&DrbMlEntry> = entries.iter().collect();
        sorted.sort_by_key(|e| e.id);
        let slots: Vec<OnceLock<BatchItem>> = (0..sorted.len()).map(|_| OnceLock::new()).collect();
        let next = AtomicUsize::new(0);
        let workers = parallelism.clamp(1, sorted.len().max(1));
        std::thread::scope(|scope| {
            for _ in 0..workers {
                scope.spawn(|| loop {
                    let i = next.fetch_add(1, Ordering::Relaxed);
                    if i >= sorted.len() {
                        break;
                    }
                    let entry = sorted[i];
                    let item = BatchItem {
                        entry_id: entry.id,
                        outcome: self.run_strategy(entry, strategy),
                    };
                    let _ = slots[i].set(item);
                });
            }
        });
        slots
            .into_iter()
            .map(|slot| slot.into_inner().expect("every slot filled"))
            .collect()
    }
}

fn backoff_delay(base_ms: u64, attempt: u32) -> Duration {
    let factor = 1u64 << (attempt - 1).min(6);
    Duration::from_millis(base_ms.saturating_mul(factor).min(30_000))
}
