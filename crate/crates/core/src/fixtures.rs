//! The committed fixture corpus and its executable annotations.
//!
//! `fixtures/manifest.json` states, for every solution of every fixture
//! problem, the verdict it must get on the original suite and on the
//! generated suite. [`verify`] forges the generated suites, judges
//! everything and checks each claim, plus the expected differential rows
//! and verdict histogram.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::diffeval::{diff_problem, verdict_histogram, DiffRow, VerdictHistogram};
use crate::forge::ForgeReport;
use crate::llm::Mode;
use crate::model::{full_pass, SuiteResult, Verdict};
use crate::pipeline::{forge_build, forge_prompt, judge_suite, PipelineError};
use crate::sandbox::Sandbox;
use crate::workspace::{Workspace, MODEL_SOLUTION, ORIGINAL_SUITE};

pub const MANIFEST_FILE: &str = "manifest.json";

/// Where a fixture's generated bundle comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BundleSource {
    /// Replayed from the recorded LLM transcript.
    Transcript,
    /// The committed `bundle/` directory.
    Committed,
}

/// Expected outcome of one solution on one suite: `AC` means a full pass,
/// any other verdict means the lowest-index failing test has that verdict.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Profile {
    pub original: Verdict,
    pub ai: Verdict,
    /// A test of the generated suite that must get the `ai` verdict.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ai_test: Option<usize>,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub note: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FixtureEntry {
    pub id: String,
    pub bundle: BundleSource,
    pub solutions: BTreeMap<String, Profile>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FixtureManifest {
    pub ai_suite: String,
    pub problems: Vec<FixtureEntry>,
    pub expected_rows: Vec<DiffRow>,
    pub expected_histogram: VerdictHistogram,
}

impl FixtureManifest {
    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let text = std::fs::read_to_string(path).map_err(|e| crate::pipeline::io_error(path, e))?;
        serde_json::from_str(&text).map_err(|e| PipelineError::Io(format!("{}: {e}", path.display())))
    }

    pub fn problem(&self, id: &str) -> Option<&FixtureEntry> {
        self.problems.iter().find(|p| p.id == id)
    }
}

/// Everything [`verify`] observed for one problem.
#[derive(Debug, Clone, Serialize)]
pub struct ProblemCheck {
    pub id: String,
    pub forge: ForgeReport,
    pub original: Vec<SuiteResult>,
    pub ai: Vec<SuiteResult>,
    pub row: DiffRow,
    pub histogram: VerdictHistogram,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub problems: Vec<ProblemCheck>,
    pub histogram: VerdictHistogram,
    /// One line per broken annotation. Empty when the corpus verifies.
    pub violations: Vec<String>,
}

impl VerifyReport {
    pub fn row(&self, id: &str) -> Option<&DiffRow> {
        self.problems.iter().find(|p| p.id == id).map(|p| &p.row)
    }

    pub fn into_result(self) -> Result<VerifyReport, PipelineError> {
        if self.violations.is_empty() {
            Ok(self)
        } else {
            Err(PipelineError::AnnotationViolated(self.violations.join("; ")))
        }
    }
}

/// What the profile claims, checked against an observed result.
fn observed(result: &SuiteResult) -> Option<Verdict> {
    if full_pass(result) {
        Some(Verdict::AC)
    } else {
        result.first_failure().map(|t| t.verdict)
    }
}

fn check_profile(problem: &str, sub: &str, profile: &Profile, original: &SuiteResult, ai: &SuiteResult, out: &mut Vec<String>) {
    for (label, want, got) in [(ORIGINAL_SUITE, profile.original, original), ("ai", profile.ai, ai)] {
        let seen = observed(got);
        if seen != Some(want) {
            let shown = if got.compile_failed { "compile failure".to_string() } else { format!("{seen:?}") };
            out.push(format!("{problem}/{sub} on {label}: expected {want}, got {shown}"));
        }
    }
    if let Some(index) = profile.ai_test {
        let got = ai.per_test.iter().find(|t| t.index == index).map(|t| t.verdict);
        if got != Some(profile.ai) {
            out.push(format!("{problem}/{sub} on ai test {index}: expected {}, got {got:?}", profile.ai));
        }
    }
}

/// Forges, judges and checks the problems listed in the manifest (or only
/// `only`). Annotation mismatches are collected, not raised; call
/// [`VerifyReport::into_result`] to turn them into an error.
pub fn verify(ws: &Workspace, manifest: &FixtureManifest, only: Option<&[String]>) -> Result<VerifyReport, PipelineError> {
    let sandbox: Arc<Sandbox> = ws.sandbox()?;
    let mut forge = ws.forge(sandbox.clone())?;
    forge.options.label = manifest.ai_suite.clone();
    let judge = ws.judge(sandbox)?;
    let mut problems = Vec::new();
    let mut violations = Vec::new();
    let mut total = VerdictHistogram::default();

    for entry in &manifest.problems {
        if only.is_some_and(|ids| !ids.contains(&entry.id)) {
            continue;
        }
        let id = entry.id.as_str();
        if entry.bundle == BundleSource::Transcript {
            forge_prompt(ws, id, Mode::Replay)?;
        }
        let (report, _) = forge_build(ws, &forge, id)?;
        let original = judge_suite(ws, &judge, id, ORIGINAL_SUITE)?;
        let ai = judge_suite(ws, &judge, id, &manifest.ai_suite)?;

        let model = ws.model_solution(id)?;
        let problem = ws.load_problem(id)?;
        for label in [ORIGINAL_SUITE, manifest.ai_suite.as_str()] {
            let suite = ws.load_suite(id, label)?;
            if !full_pass(&judge.judge_submission(&model, &suite, &problem)?) {
                violations.push(format!("{id}/{MODEL_SOLUTION} does not fully pass suite {label}"));
            }
        }

        let corpus_ids: Vec<&str> = original.iter().map(|r| r.submission_id.as_str()).collect();
        for sid in &corpus_ids {
            if !entry.solutions.contains_key(*sid) {
                violations.push(format!("{id}/{sid} has no annotation"));
            }
        }
        for (sid, profile) in &entry.solutions {
            let o = original.iter().find(|r| &r.submission_id == sid);
            let a = ai.iter().find(|r| &r.submission_id == sid);
            match (o, a) {
                (Some(o), Some(a)) => check_profile(id, sid, profile, o, a, &mut violations),
                _ => violations.push(format!("{id}/{sid} is annotated but has no solution file")),
            }
        }

        let row = diff_problem(id, &original, &ai)?;
        match manifest.expected_rows.iter().find(|r| r.problem_id == id) {
            Some(want) if want != &row => violations.push(format!("{id}: expected row {want:?}, got {row:?}")),
            None => violations.push(format!("{id}: no expected row")),
            _ => {}
        }
        let histogram = verdict_histogram(&original, &ai)?;
        total.merge(&histogram);
        problems.push(ProblemCheck { id: id.to_string(), forge: report, original, ai, row, histogram });
    }
    if only.is_none() && total != manifest.expected_histogram {
        violations.push(format!("histogram: expected {:?}, got {total:?}", manifest.expected_histogram));
    }
    Ok(VerifyReport { problems, histogram: total, violations })
}
