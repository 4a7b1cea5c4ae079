//! An in-process judge implementing the remote contract.
//!
//! The request log records method, path and status only. Headers are never
//! stored, so the bearer token cannot appear in it.

use std::collections::BTreeMap;
use std::sync::{Arc, Mutex};
use std::thread::JoinHandle;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{manifest_of_zip, Manifest, RejudgeJob, RemoteProblem, RemoteSubmission, Secret, TestListing};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoggedRequest {
    pub method: String,
    pub path: String,
    pub status: u16,
}

#[derive(Debug, Clone, Default)]
pub struct MockState {
    pub problems: BTreeMap<u64, RemoteProblem>,
    pub submissions: BTreeMap<u64, Vec<RemoteSubmission>>,
    pub tests: BTreeMap<u64, Manifest>,
    pub jobs: Vec<RejudgeJob>,
}

impl MockState {
    pub fn with_problem(mut self, problem: RemoteProblem, submissions: Vec<RemoteSubmission>) -> Self {
        self.submissions.insert(problem.id, submissions);
        self.problems.insert(problem.id, problem);
        self
    }
}

enum Fault {
    Status(u16),
    Stall(Duration),
}

struct Shared {
    state: MockState,
    log: Vec<LoggedRequest>,
    faults: Vec<Fault>,
}

pub struct MockServer {
    url: String,
    server: Arc<tiny_http::Server>,
    shared: Arc<Mutex<Shared>>,
    worker: Option<JoinHandle<()>>,
}

impl MockServer {
    /// Binds an ephemeral port on 127.0.0.1 and starts serving.
    pub fn start(state: MockState, token: Secret) -> std::io::Result<Self> {
        let server = Arc::new(tiny_http::Server::http("127.0.0.1:0").map_err(std::io::Error::other)?);
        let addr = server.server_addr().to_ip().expect("tcp listener");
        let shared = Arc::new(Mutex::new(Shared { state, log: Vec::new(), faults: Vec::new() }));
        let worker = {
            let server = Arc::clone(&server);
            let shared = Arc::clone(&shared);
            std::thread::spawn(move || {
                for request in server.incoming_requests() {
                    handle(request, &shared, &token);
                }
            })
        };
        Ok(MockServer { url: format!("http://{addr}"), server, shared, worker: Some(worker) })
    }

    pub fn url(&self) -> &str {
        &self.url
    }

    /// The next `n` requests answer with `status` before being handled.
    pub fn fail_next(&self, n: usize, status: u16) {
        let mut s = self.shared.lock().unwrap();
        s.faults.extend((0..n).map(|_| Fault::Status(status)));
    }

    /// The next request sleeps for `delay` before being handled.
    pub fn stall_next(&self, delay: Duration) {
        self.shared.lock().unwrap().faults.push(Fault::Stall(delay));
    }

    pub fn requests(&self) -> Vec<LoggedRequest> {
        self.shared.lock().unwrap().log.clone()
    }

    pub fn state(&self) -> MockState {
        self.shared.lock().unwrap().state.clone()
    }
}

impl Drop for MockServer {
    fn drop(&mut self) {
        self.server.unblock();
        if let Some(w) = self.worker.take() {
            let _ = w.join();
        }
    }
}

type Reply = (u16, Vec<u8>);

fn json_reply<T: Serialize>(status: u16, value: &T) -> Reply {
    (status, serde_json::to_vec(value).expect("reply serializes"))
}

fn error(status: u16, message: &str) -> Reply {
    json_reply(status, &json!({ "error": message }))
}

fn handle(mut request: tiny_http::Request, shared: &Mutex<Shared>, token: &Secret) {
    let method = request.method().as_str().to_string();
    let url = request.url().to_string();
    let fault = {
        let mut s = shared.lock().unwrap();
        if s.faults.is_empty() {
            None
        } else {
            Some(s.faults.remove(0))
        }
    };
    let authorized = request
        .headers()
        .iter()
        .find(|h| h.field.equiv("Authorization"))
        .map(|h| h.value.as_str().strip_prefix("Bearer ") == Some(token.expose()));
    let mut body = Vec::new();
    let read = request.as_reader().read_to_end(&mut body);

    let (status, payload) = match fault {
        Some(Fault::Status(code)) => error(code, "injected failure"),
        stall => {
            if let Some(Fault::Stall(d)) = stall {
                std::thread::sleep(d);
            }
            match (authorized, read) {
                (None, _) => error(401, "missing bearer token"),
                (Some(false), _) => error(403, "invalid token"),
                (_, Err(e)) => error(400, &e.to_string()),
                (Some(true), Ok(_)) => route(&method, &url, &body, &mut shared.lock().unwrap().state),
            }
        }
    };
    shared.lock().unwrap().log.push(LoggedRequest { method, path: url, status });
    let header = tiny_http::Header::from_bytes("Content-Type", "application/json").expect("static header");
    let _ = request.respond(tiny_http::Response::from_data(payload).with_status_code(status).with_header(header));
}

fn route(method: &str, url: &str, body: &[u8], state: &mut MockState) -> Reply {
    let (path, query) = url.split_once('?').unwrap_or((url, ""));
    let segments: Vec<&str> = path.trim_matches('/').split('/').collect();
    let id = |s: &str| s.parse::<u64>().ok().filter(|id| state.problems.contains_key(id));
    match (method, segments.as_slice()) {
        ("GET", ["problems", raw]) => match id(raw) {
            Some(id) => json_reply(200, &state.problems[&id]),
            None => error(404, "no such problem"),
        },
        ("GET", ["problems", raw, "submissions"]) => {
            let Some(id) = id(raw) else {
                return error(404, "no such problem");
            };
            let accepted_only = match query {
                "" | "filter=all" => false,
                "filter=accepted" => true,
                _ => return error(400, "filter must be `all` or `accepted`"),
            };
            let subs: Vec<&RemoteSubmission> = state.submissions[&id].iter().filter(|s| !accepted_only || s.score == 100).collect();
            json_reply(200, &subs)
        }
        ("POST", ["problems", raw, "tests"]) => {
            let Some(id) = id(raw) else {
                return error(404, "no such problem");
            };
            match manifest_of_zip(body) {
                Ok(manifest) => {
                    state.tests.insert(id, manifest.clone());
                    json_reply(201, &TestListing { problem_id: id, manifest })
                }
                Err(e) => error(400, &e.to_string()),
            }
        }
        ("GET", ["problems", raw, "tests"]) => match id(raw) {
            Some(id) => json_reply(200, &TestListing { problem_id: id, manifest: state.tests.get(&id).cloned().unwrap_or_default() }),
            None => error(404, "no such problem"),
        },
        ("POST", ["rejudge"]) => {
            #[derive(Deserialize)]
            struct Req {
                problem_id: u64,
                submission_ids: Vec<String>,
            }
            let Ok(req) = serde_json::from_slice::<Req>(body) else {
                return error(400, "expected {problem_id, submission_ids}");
            };
            let Some(known) = state.submissions.get(&req.problem_id) else {
                return error(404, "no such problem");
            };
            if let Some(missing) = req.submission_ids.iter().find(|s| !known.iter().any(|k| &k.id == *s)) {
                return error(404, &format!("no such submission `{missing}`"));
            }
            let job = RejudgeJob {
                job_id: format!("job-{}", state.jobs.len() + 1),
                problem_id: req.problem_id,
                submission_ids: req.submission_ids,
                status: "queued".into(),
            };
            state.jobs.push(job.clone());
            json_reply(202, &job)
        }
        _ => error(404, "no such route"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exchange::{export_archive, ArchiveFormat, ExchangeError, RemoteClient, RemoteEndpoint, SubmissionFilter};
    use crate::model::{Limits, TestCase, TestSuite};

    fn seeded() -> MockState {
        let problem = RemoteProblem {
            id: 7,
            slug: "aplusb".into(),
            statement_markdown: "Print a + b.\n".into(),
            limits: Limits::new(1000, 256, 1 << 20).unwrap(),
        };
        let sub = |id: &str, score| RemoteSubmission {
            id: id.into(),
            source_text: "int main() {}\n".into(),
            toolchain_id: "cpp17".into(),
            score,
        };
        MockState::default().with_problem(problem, vec![sub("s1", 100), sub("s2", 40), sub("s3", 100)])
    }

    fn client(mock: &MockServer, token: &str) -> RemoteClient {
        RemoteClient::new(RemoteEndpoint::new(mock.url()).unwrap(), Secret::new(token)).unwrap().with_backoff(Duration::from_millis(5))
    }

    #[test]
    fn lifecycle_against_the_mock() {
        let mock = MockServer::start(seeded(), Secret::new("tok-123")).unwrap();
        let c = client(&mock, "tok-123");
        assert_eq!(c.fetch_problem(7).unwrap().statement_markdown, "Print a + b.\n");
        let all = c.fetch_submissions(7, SubmissionFilter::All).unwrap();
        let accepted = c.fetch_submissions(7, SubmissionFilter::Accepted).unwrap();
        assert_eq!(all.len(), 3);
        assert_eq!(accepted.iter().map(|s| s.id.as_str()).collect::<Vec<_>>(), ["s1", "s3"]);

        let dir = tempfile::tempdir().unwrap();
        let suite = TestSuite::new("ai", vec![TestCase::new(1, b"1 2\n".to_vec(), Some(b"3\n".to_vec()))]).unwrap();
        let zip = dir.path().join("t.zip");
        let local = export_archive(&suite, ArchiveFormat::FlatZip, &zip).unwrap();
        let ack = c.upload_tests(7, &zip).unwrap();
        assert_eq!(ack.manifest, local);
        assert_eq!(c.list_tests(7).unwrap().manifest, local);

        let job = c.request_rejudge(7, &["s1".into(), "s3".into()]).unwrap();
        assert_eq!(job.job_id, "job-1");
        assert_eq!(mock.state().jobs, vec![job]);
        assert!(matches!(c.request_rejudge(7, &["nope".into()]), Err(ExchangeError::RemoteError { status: 404, .. })));
        let log = serde_json::to_string(&mock.requests()).unwrap();
        assert!(!log.contains("tok-123"));
    }

    #[test]
    fn auth_failures_are_not_retried() {
        let mock = MockServer::start(seeded(), Secret::new("right")).unwrap();
        assert_eq!(client(&mock, "wrong").fetch_problem(7), Err(ExchangeError::AuthFailure(403)));
        assert_eq!(mock.requests().len(), 1);
    }

    #[test]
    fn server_errors_are_retried_three_times() {
        let mock = MockServer::start(seeded(), Secret::new("t")).unwrap();
        let c = client(&mock, "t");
        mock.fail_next(2, 503);
        assert_eq!(c.fetch_problem(7).unwrap().id, 7);
        assert_eq!(mock.requests().iter().map(|r| r.status).collect::<Vec<_>>(), [503, 503, 200]);

        mock.fail_next(3, 500);
        assert!(matches!(c.fetch_problem(7), Err(ExchangeError::RemoteError { status: 500, .. })));
        assert_eq!(mock.requests().len(), 6);
    }

    #[test]
    fn slow_responses_time_out_then_retry() {
        let mock = MockServer::start(seeded(), Secret::new("t")).unwrap();
        let mut endpoint = RemoteEndpoint::new(mock.url()).unwrap();
        endpoint.timeout_ms = 200;
        let c = RemoteClient::new(endpoint, Secret::new("t")).unwrap().with_backoff(Duration::from_millis(5));
        mock.stall_next(Duration::from_millis(600));
        assert_eq!(c.fetch_problem(7).unwrap().id, 7);
    }
}
