use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::time::Duration;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::{ExchangeError, Manifest};
use crate::model::{Limits, Origin, Problem, Submission};

pub const DEFAULT_TOKEN_ENV: &str = "JUDGEFORGE_REMOTE_TOKEN";

const ATTEMPTS: u32 = 3;

/// A bearer token. It has no `Serialize` impl and its `Debug` and `Display`
/// output is redacted, so it cannot leak through reports or logs by accident.
#[derive(Clone, PartialEq, Eq)]
pub struct Secret(String);

impl Secret {
    pub fn new(value: impl Into<String>) -> Self {
        Secret(value.into())
    }

    pub fn expose(&self) -> &str {
        &self.0
    }
}

impl fmt::Debug for Secret {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("Secret(<redacted>)")
    }
}

impl fmt::Display for Secret {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("<redacted>")
    }
}

fn default_token_env() -> String {
    DEFAULT_TOKEN_ENV.to_string()
}

fn default_timeout_ms() -> u64 {
    10_000
}

fn default_concurrency() -> usize {
    4
}

/// Where the remote judge lives. Only the name of the token's environment
/// variable is stored, never the token.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RemoteEndpoint {
    pub base_url: String,
    #[serde(default = "default_token_env")]
    pub token_env: String,
    /// Local problem slug to remote numeric id.
    #[serde(default)]
    pub problem_ids: BTreeMap<String, u64>,
    #[serde(default = "default_timeout_ms")]
    pub timeout_ms: u64,
    #[serde(default = "default_concurrency")]
    pub max_connections: usize,
}

impl RemoteEndpoint {
    pub fn new(base_url: impl Into<String>) -> Result<Self, ExchangeError> {
        let endpoint = RemoteEndpoint {
            base_url: base_url.into(),
            token_env: default_token_env(),
            problem_ids: BTreeMap::new(),
            timeout_ms: default_timeout_ms(),
            max_connections: default_concurrency(),
        };
        endpoint.validate()?;
        Ok(endpoint)
    }

    pub fn with_problem(mut self, slug: impl Into<String>, remote_id: u64) -> Self {
        self.problem_ids.insert(slug.into(), remote_id);
        self
    }

    pub fn validate(&self) -> Result<(), ExchangeError> {
        let bad = |why: &str| ExchangeError::InvalidEndpoint(format!("`{}`: {why}", self.base_url));
        let uri: ureq::http::Uri = self.base_url.parse().map_err(|_| bad("not a valid URL"))?;
        match uri.scheme_str() {
            Some("http") | Some("https") => {}
            _ => return Err(bad("scheme must be http or https")),
        }
        if uri.host().is_none_or(str::is_empty) {
            return Err(bad("missing host"));
        }
        if uri.query().is_some() {
            return Err(bad("base URL must not carry a query"));
        }
        if self.max_connections == 0 {
            return Err(ExchangeError::InvalidEndpoint("max_connections must be at least 1".into()));
        }
        Ok(())
    }

    pub fn remote_id(&self, slug: &str) -> Result<u64, ExchangeError> {
        self.problem_ids.get(slug).copied().ok_or_else(|| ExchangeError::UnmappedProblem(slug.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RemoteProblem {
    pub id: u64,
    pub slug: String,
    pub statement_markdown: String,
    pub limits: Limits,
}

impl RemoteProblem {
    pub fn into_problem(self) -> Result<Problem, ExchangeError> {
        Problem::new(self.slug, self.statement_markdown, self.limits).map_err(|e| ExchangeError::Malformed(e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RemoteSubmission {
    pub id: String,
    pub source_text: String,
    pub toolchain_id: String,
    /// Score on the remote's own suite, out of 100.
    pub score: u32,
}

impl RemoteSubmission {
    pub fn into_submission(self) -> Result<Submission, ExchangeError> {
        Submission::new(self.id, self.source_text, self.toolchain_id, Origin::Contest).map_err(|e| ExchangeError::Malformed(e.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SubmissionFilter {
    All,
    /// Only submissions that scored 100 points.
    Accepted,
}

impl SubmissionFilter {
    pub fn as_str(&self) -> &'static str {
        match self {
            SubmissionFilter::All => "all",
            SubmissionFilter::Accepted => "accepted",
        }
    }
}

/// Upload acknowledgement and test listing.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TestListing {
    pub problem_id: u64,
    pub manifest: Manifest,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RejudgeJob {
    pub job_id: String,
    pub problem_id: u64,
    pub submission_ids: Vec<String>,
    pub status: String,
}

#[derive(Serialize)]
struct RejudgeRequest<'a> {
    problem_id: u64,
    submission_ids: &'a [String],
}

pub struct RemoteClient {
    endpoint: RemoteEndpoint,
    token: Secret,
    agent: ureq::Agent,
    backoff: Duration,
}

impl fmt::Debug for RemoteClient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RemoteClient").field("endpoint", &self.endpoint).field("token", &self.token).finish()
    }
}

enum Body<'a> {
    Empty,
    Json(Vec<u8>),
    Zip(&'a [u8]),
}

impl RemoteClient {
    /// Reads the token from the endpoint's environment variable.
    pub fn from_env(endpoint: RemoteEndpoint) -> Result<Self, ExchangeError> {
        let token = std::env::var(&endpoint.token_env)
            .map_err(|_| ExchangeError::InvalidEndpoint(format!("environment variable {} is not set", endpoint.token_env)))?;
        Self::new(endpoint, Secret::new(token))
    }

    pub fn new(endpoint: RemoteEndpoint, token: Secret) -> Result<Self, ExchangeError> {
        endpoint.validate()?;
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_millis(endpoint.timeout_ms)))
            .http_status_as_error(false)
            .max_idle_connections_per_host(endpoint.max_connections)
            .build()
            .into();
        Ok(RemoteClient { endpoint, token, agent, backoff: Duration::from_millis(200) })
    }

    /// First retry waits `backoff`, the second twice that.
    pub fn with_backoff(mut self, backoff: Duration) -> Self {
        self.backoff = backoff;
        self
    }

    pub fn endpoint(&self) -> &RemoteEndpoint {
        &self.endpoint
    }

    pub fn fetch_problem(&self, remote_id: u64) -> Result<RemoteProblem, ExchangeError> {
        self.json("GET", &format!("/problems/{remote_id}"), Body::Empty)
    }

    pub fn fetch_submissions(&self, remote_id: u64, filter: SubmissionFilter) -> Result<Vec<RemoteSubmission>, ExchangeError> {
        self.json("GET", &format!("/problems/{remote_id}/submissions?filter={}", filter.as_str()), Body::Empty)
    }

    /// Uploads a flat zip archive. The acknowledgement carries the manifest
    /// the remote computed from the bytes it received.
    pub fn upload_tests(&self, remote_id: u64, archive: &Path) -> Result<TestListing, ExchangeError> {
        let bytes = std::fs::read(archive).map_err(|e| ExchangeError::Io(format!("{}: {e}", archive.display())))?;
        self.json("POST", &format!("/problems/{remote_id}/tests"), Body::Zip(&bytes))
    }

    pub fn list_tests(&self, remote_id: u64) -> Result<TestListing, ExchangeError> {
        self.json("GET", &format!("/problems/{remote_id}/tests"), Body::Empty)
    }

    pub fn request_rejudge(&self, remote_id: u64, submission_ids: &[String]) -> Result<RejudgeJob, ExchangeError> {
        let req = RejudgeRequest { problem_id: remote_id, submission_ids };
        let body = serde_json::to_vec(&req).expect("request serializes");
        self.json("POST", "/rejudge", Body::Json(body))
    }

    fn json<T: DeserializeOwned>(&self, method: &str, path: &str, body: Body<'_>) -> Result<T, ExchangeError> {
        let bytes = self.call(method, path, &body)?;
        serde_json::from_slice(&bytes).map_err(|e| ExchangeError::Malformed(format!("{method} {path}: {e}")))
    }

    fn call(&self, method: &str, path: &str, body: &Body<'_>) -> Result<Vec<u8>, ExchangeError> {
        let mut delay = self.backoff;
        let mut attempt = 1;
        loop {
            let result = self.once(method, path, body);
            let retryable = match &result {
                Err(ExchangeError::Timeout) => true,
                Err(ExchangeError::RemoteError { status, .. }) => *status == 0 || *status >= 500,
                _ => false,
            };
            if !retryable || attempt == ATTEMPTS {
                return result;
            }
            log::warn!("{method} {path}: attempt {attempt} failed, retrying in {delay:?}");
            std::thread::sleep(delay);
            delay *= 2;
            attempt += 1;
        }
    }

    fn once(&self, method: &str, path: &str, body: &Body<'_>) -> Result<Vec<u8>, ExchangeError> {
        let url = format!("{}{path}", self.endpoint.base_url.trim_end_matches('/'));
        let auth = format!("Bearer {}", self.token.expose());
        log::debug!("{method} {path}");
        let response = match (method, body) {
            ("GET", _) => self.agent.get(&url).header("Authorization", &auth).call(),
            (_, Body::Zip(bytes)) => {
                self.agent.post(&url).header("Authorization", &auth).header("Content-Type", "application/zip").send(*bytes)
            }
            (_, Body::Json(bytes)) => {
                self.agent.post(&url).header("Authorization", &auth).header("Content-Type", "application/json").send(bytes.as_slice())
            }
            (_, Body::Empty) => self.agent.post(&url).header("Authorization", &auth).send_empty(),
        };
        let mut response = response.map_err(transport_error)?;
        let status = response.status().as_u16();
        let bytes = response.body_mut().read_to_vec().map_err(transport_error)?;
        match status {
            200..=299 => Ok(bytes),
            401 | 403 => Err(ExchangeError::AuthFailure(status)),
            _ => Err(ExchangeError::RemoteError { status, body: String::from_utf8_lossy(&bytes[..bytes.len().min(512)]).into_owned() }),
        }
    }
}

fn transport_error(e: ureq::Error) -> ExchangeError {
    match e {
        ureq::Error::Timeout(_) => ExchangeError::Timeout,
        other => ExchangeError::RemoteError { status: 0, body: other.to_string() },
    }
}
