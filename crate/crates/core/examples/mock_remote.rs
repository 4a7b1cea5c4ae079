//! Pulls a problem from the bundled mock judge, pushes a test archive and
//! requests a rejudge of the accepted submissions.
//!
//!     cargo run --example mock_remote

use std::path::Path;
use std::time::Duration;

use judgeforge::exchange::mock::{MockServer, MockState};
use judgeforge::exchange::{
    export_archive, import_archive, ArchiveFormat, RemoteClient, RemoteEndpoint, RemoteProblem, RemoteSubmission, Secret, SubmissionFilter,
};
use judgeforge::model::Limits;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let token = Secret::new("example-token");
    let problem = RemoteProblem {
        id: 1,
        slug: "aplusb".into(),
        statement_markdown: "# A+B\n\nPrint A + B.\n".into(),
        limits: Limits::new(1000, 64, 1 << 20)?,
    };
    let subs = (1..=4)
        .map(|i| RemoteSubmission {
            id: format!("sub-{i}"),
            source_text: "int main() {}\n".into(),
            toolchain_id: "cpp17".into(),
            score: if i % 2 == 1 { 100 } else { 60 },
        })
        .collect();
    let mock = MockServer::start(MockState::default().with_problem(problem, subs), token.clone())?;
    println!("mock judge at {}", mock.url());

    let endpoint = RemoteEndpoint::new(mock.url())?.with_problem("aplusb", 1);
    let client = RemoteClient::new(endpoint, token)?.with_backoff(Duration::from_millis(50));
    let id = client.endpoint().remote_id("aplusb")?;

    let fetched = client.fetch_problem(id)?;
    println!("pulled {}: {:?}", fetched.slug, fetched.statement_markdown.lines().next());
    let accepted = client.fetch_submissions(id, SubmissionFilter::Accepted)?;
    println!("accepted: {:?}", accepted.iter().map(|s| &s.id).collect::<Vec<_>>());

    let suite = import_archive(&Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/archives/aplusb-ai.zip"), None, "ai")?;
    let dir = tempfile::tempdir()?;
    let zip = dir.path().join("ai.zip");
    let local = export_archive(&suite, ArchiveFormat::FlatZip, &zip)?;
    mock.fail_next(1, 503);
    let ack = client.upload_tests(id, &zip)?;
    println!("uploaded {} files after a retry; hashes match: {}", ack.manifest.entries.len(), ack.manifest == local);

    let ids: Vec<String> = accepted.into_iter().map(|s| s.id).collect();
    let job = client.request_rejudge(id, &ids)?;
    println!("rejudge {} is {}", job.job_id, job.status);

    for r in mock.requests() {
        println!("  {} {} -> {}", r.method, r.path, r.status);
    }
    Ok(())
}
