//! Chat-completion client with a content-addressed transcript cache.
//!
//! Three modes: `Live` calls the provider, `Record` calls it and stores the
//! exchange, `Replay` only reads the cache and never touches the transport.

mod cache;
mod cost;
mod http;

use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use cache::{cache_key, TranscriptCache};
pub use cost::{cost_of, CostLedger, LedgerEntry, ModelPrice, PriceTable};
pub use http::{HttpTransport, DEFAULT_API_KEY_ENV, DEFAULT_BASE_URL_ENV};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum LlmError {
    #[error("no cached transcript for key {0}")]
    CacheMiss(String),
    #[error("provider returned status {status}: {body}")]
    ProviderError { status: u16, body: String },
    #[error("request to the provider timed out")]
    Timeout,
    #[error("model `{0}` has no entry in the price table")]
    UnknownModel(String),
    #[error("no transport configured for {0} mode")]
    NoTransport(Mode),
    #[error("transcript cache error: {0}")]
    Cache(String),
    #[error("malformed provider response: {0}")]
    Malformed(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Live,
    Record,
    Replay,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Live => "live",
            Mode::Record => "record",
            Mode::Replay => "replay",
        })
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "live" => Ok(Mode::Live),
            "record" => Ok(Mode::Record),
            "replay" => Ok(Mode::Replay),
            other => Err(format!("unknown mode `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatExchange {
    pub model_id: String,
    pub prompt: String,
    pub response: String,
    pub input_tokens: u64,
    pub output_tokens: u64,
    /// True when the provider gave no usage metadata and the counts are
    /// `ceil(bytes / 4)` estimates.
    #[serde(default)]
    pub tokens_estimated: bool,
    pub timestamp: DateTime<Utc>,
}

impl ChatExchange {
    pub fn key(&self) -> String {
        cache_key(&self.model_id, &self.prompt)
    }
}

/// Raw provider answer before it is stamped into a [`ChatExchange`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Reply {
    pub text: String,
    /// `(input_tokens, output_tokens)` from the provider, if reported.
    pub usage: Option<(u64, u64)>,
}

pub trait Transport: Send + Sync {
    fn chat(&self, model_id: &str, prompt: &str) -> Result<Reply, LlmError>;
}

pub fn estimate_tokens(text: &str) -> u64 {
    (text.len() as u64).div_ceil(4)
}

pub struct LlmClient {
    transport: Option<Box<dyn Transport>>,
    cache: TranscriptCache,
}

impl LlmClient {
    pub fn new(cache: TranscriptCache, transport: Option<Box<dyn Transport>>) -> Self {
        LlmClient { transport, cache }
    }

    /// A client that can only replay.
    pub fn offline(cache: TranscriptCache) -> Self {
        Self::new(cache, None)
    }

    pub fn cache(&self) -> &TranscriptCache {
        &self.cache
    }

    pub fn complete(&self, model_id: &str, prompt: &str, mode: Mode) -> Result<ChatExchange, LlmError> {
        if mode == Mode::Replay {
            let key = cache_key(model_id, prompt);
            return self.cache.get(&key)?.ok_or(LlmError::CacheMiss(key));
        }
        let transport = self.transport.as_ref().ok_or(LlmError::NoTransport(mode))?;
        let reply = transport.chat(model_id, prompt)?;
        let (input_tokens, output_tokens, tokens_estimated) = match reply.usage {
            Some((i, o)) => (i, o, false),
            None => (estimate_tokens(prompt), estimate_tokens(&reply.text), true),
        };
        let exchange = ChatExchange {
            model_id: model_id.to_string(),
            prompt: prompt.to_string(),
            response: reply.text,
            input_tokens,
            output_tokens,
            tokens_estimated,
            timestamp: Utc::now(),
        };
        if mode == Mode::Record {
            self.cache.put(&exchange)?;
        }
        Ok(exchange)
    }
}
