use std::fmt;
use std::time::Duration;

use serde_json::{json, Value};

use super::{LlmError, Reply, Transport};

pub const DEFAULT_BASE_URL_ENV: &str = "JUDGEFORGE_LLM_BASE_URL";
pub const DEFAULT_API_KEY_ENV: &str = "JUDGEFORGE_LLM_API_KEY";

/// OpenAI-compatible `POST {base_url}/chat/completions`.
pub struct HttpTransport {
    base_url: String,
    api_key: Option<String>,
    agent: ureq::Agent,
}

impl fmt::Debug for HttpTransport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("HttpTransport")
            .field("base_url", &self.base_url)
            .field("api_key", &self.api_key.as_ref().map(|_| "<redacted>"))
            .finish()
    }
}

impl HttpTransport {
    pub fn new(base_url: impl Into<String>, api_key: Option<String>, timeout: Duration) -> Self {
        let agent = ureq::Agent::config_builder().timeout_global(Some(timeout)).http_status_as_error(false).build().into();
        HttpTransport { base_url: base_url.into().trim_end_matches('/').to_string(), api_key, agent }
    }

    /// Reads the base URL and key from the named environment variables.
    /// `fallback_url` is used when the URL variable is unset.
    pub fn from_env(url_var: &str, key_var: &str, fallback_url: &str, timeout: Duration) -> Self {
        let url = std::env::var(url_var).unwrap_or_else(|_| fallback_url.to_string());
        Self::new(url, std::env::var(key_var).ok(), timeout)
    }
}

impl Transport for HttpTransport {
    fn chat(&self, model_id: &str, prompt: &str) -> Result<Reply, LlmError> {
        let body = json!({
            "model": model_id,
            "messages": [{"role": "user", "content": prompt}],
        });
        let mut req = self.agent.post(format!("{}/chat/completions", self.base_url));
        if let Some(key) = &self.api_key {
            req = req.header("Authorization", format!("Bearer {key}"));
        }
        let mut resp = req.send_json(&body).map_err(map_err)?;
        let status = resp.status().as_u16();
        let text = resp.body_mut().read_to_string().map_err(map_err)?;
        if !(200..300).contains(&status) {
            return Err(LlmError::ProviderError { status, body: text });
        }
        parse_completion(&text)
    }
}

fn map_err(e: ureq::Error) -> LlmError {
    match e {
        ureq::Error::Timeout(_) => LlmError::Timeout,
        other => LlmError::ProviderError { status: 0, body: other.to_string() },
    }
}

fn parse_completion(text: &str) -> Result<Reply, LlmError> {
    let v: Value = serde_json::from_str(text).map_err(|e| LlmError::Malformed(e.to_string()))?;
    let content =
        v["choices"][0]["message"]["content"].as_str().ok_or_else(|| LlmError::Malformed("missing choices[0].message.content".into()))?;
    let usage = match (v["usage"]["prompt_tokens"].as_u64(), v["usage"]["completion_tokens"].as_u64()) {
        (Some(i), Some(o)) => Some((i, o)),
        _ => None,
    };
    Ok(Reply { text: content.to_string(), usage })
}
