//! Test archives in judge-platform layouts, and a small HTTP client for a
//! remote judge. The wire contract is in `docs/remote-api.md`; [`mock`]
//! implements it for tests and examples.

mod archive;
pub mod mock;
mod remote;

use thiserror::Error;

pub use archive::{export_archive, import_archive, manifest_of_zip, sha256_hex, ArchiveFormat, Manifest, ManifestEntry};
pub use remote::{
    RejudgeJob, RemoteClient, RemoteEndpoint, RemoteProblem, RemoteSubmission, Secret, SubmissionFilter, TestListing, DEFAULT_TOKEN_ENV,
};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ExchangeError {
    #[error("suite is incomplete: `{0}` has no expected output")]
    IncompleteSuite(String),
    #[error("unrecognized archive layout: {0}")]
    UnrecognizedLayout(String),
    #[error("orphan file `{0}` has no matching input or expected file")]
    OrphanFile(String),
    #[error("unexpected file `{0}` in archive")]
    UnexpectedFile(String),
    #[error("duplicate test case: {0}")]
    DuplicateCase(String),
    #[error("authentication failed (HTTP {0})")]
    AuthFailure(u16),
    #[error("remote error: HTTP {status}: {body}")]
    RemoteError { status: u16, body: String },
    #[error("remote request timed out")]
    Timeout,
    #[error("no remote id mapped for problem `{0}`")]
    UnmappedProblem(String),
    #[error("invalid endpoint: {0}")]
    InvalidEndpoint(String),
    #[error("malformed remote response: {0}")]
    Malformed(String),
    #[error("i/o error: {0}")]
    Io(String),
}
