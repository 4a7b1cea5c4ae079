//! Per-test verdicts for one submission against one suite.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{CheckerKind, Limits, Problem, Submission, SuiteResult, TestCase, TestSuite, TestVerdict, Verdict};
use crate::sandbox::{ExecSpec, ExitStatus, RunOutcome, Sandbox, SandboxError};
use crate::toolchain::{compile_component, BuildCache, ToolchainError, ToolchainSpec};

/// Fraction below the time limit inside which a run is repeated once.
pub const DEFAULT_JITTER_BAND: f64 = 0.05;

#[derive(Debug, Error)]
pub enum JudgeError {
    #[error("checker failed on test {index}: {reason}")]
    CheckerFailure { index: usize, reason: String },
    #[error("submission `{submission}` uses unknown toolchain `{toolchain}`")]
    UnknownToolchain { submission: String, toolchain: String },
    #[error("suite `{0}` has cases without expected output")]
    IncompleteSuite(String),
    #[error(transparent)]
    Sandbox(#[from] SandboxError),
    #[error(transparent)]
    Toolchain(#[from] ToolchainError),
    #[error("judge i/o error: {0}")]
    Io(String),
}

fn io_err(path: &Path, e: std::io::Error) -> JudgeError {
    JudgeError::Io(format!("{}: {e}", path.display()))
}

/// True iff both byte strings split into the same whitespace-separated
/// tokens.
pub fn compare_tokens(expected: &[u8], actual: &[u8]) -> bool {
    fn tokens(b: &[u8]) -> impl Iterator<Item = &[u8]> {
        b.split(u8::is_ascii_whitespace).filter(|t| !t.is_empty())
    }
    tokens(expected).eq(tokens(actual))
}

/// A checker ready to run: token comparison or a compiled program invoked
/// as `checker <input> <output> <expected>`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Checker {
    TokenCompare,
    External(PathBuf),
}

const CHECKER_LIMITS: (u64, u64, u64) = (10_000, 512, 1 << 20);

/// Verdict precedence: TLE, then MLE, then output overflow (WA), then
/// abnormal exit (RE), then the checker.
pub fn verdict_of(outcome: &RunOutcome, case: &TestCase, actual: &[u8], checker: &Checker) -> Result<Verdict, JudgeError> {
    if outcome.flags.time_exceeded {
        return Ok(Verdict::TLE);
    }
    if outcome.flags.memory_exceeded {
        return Ok(Verdict::MLE);
    }
    if outcome.flags.output_truncated {
        return Ok(Verdict::WA);
    }
    if !matches!(outcome.exit_status, ExitStatus::Exited(0)) {
        return Ok(Verdict::RE);
    }
    let expected = case.expected.as_deref().unwrap_or_default();
    match checker {
        Checker::TokenCompare => Ok(if compare_tokens(expected, actual) { Verdict::AC } else { Verdict::WA }),
        Checker::External(program) => run_checker(program, case, actual),
    }
}

fn run_checker(program: &Path, case: &TestCase, actual: &[u8]) -> Result<Verdict, JudgeError> {
    let failure = |reason: String| JudgeError::CheckerFailure { index: case.index, reason };
    let dir = tempfile::tempdir().map_err(|e| failure(e.to_string()))?;
    let write = |name: &str, bytes: &[u8]| -> Result<PathBuf, JudgeError> {
        let p = dir.path().join(name);
        fs::write(&p, bytes).map_err(|e| failure(e.to_string()))?;
        Ok(p)
    };
    let input = write("input", &case.input)?;
    let output = write("output", actual)?;
    let answer = write("answer", case.expected.as_deref().unwrap_or_default())?;
    let (t, m, o) = CHECKER_LIMITS;
    let limits = Limits::new(t, m, o).expect("static limits");
    let spec = ExecSpec::new([program.as_os_str(), input.as_os_str(), output.as_os_str(), answer.as_os_str()], dir.path(), limits);
    let outcome = crate::sandbox::run_limited(&spec).map_err(|e| failure(e.to_string()))?;
    outcome.cleanup();
    match outcome.exit_status {
        _ if outcome.flags.time_exceeded || outcome.flags.memory_exceeded => {
            Err(failure(format!("checker exceeded its limits: {:?}", outcome.flags)))
        }
        ExitStatus::Exited(0) => Ok(Verdict::AC),
        ExitStatus::Exited(1) | ExitStatus::Exited(2) => Ok(Verdict::WA),
        other => Err(failure(format!("checker ended with {other:?}: {}", outcome.stderr_excerpt.trim()))),
    }
}

#[derive(Debug, Clone)]
pub struct JudgeOptions {
    /// Repeat a run whose CPU time lands in `[(1 - band) * limit, limit)`
    /// and keep the worse outcome. `None` disables the guard.
    pub jitter_band: Option<f64>,
}

impl Default for JudgeOptions {
    fn default() -> Self {
        JudgeOptions { jitter_band: Some(DEFAULT_JITTER_BAND) }
    }
}

pub struct Judge {
    sandbox: Arc<Sandbox>,
    toolchains: BTreeMap<String, ToolchainSpec>,
    build: BuildCache,
    scratch: PathBuf,
    pub options: JudgeOptions,
}

struct Prepared {
    exe: PathBuf,
    checker: Checker,
    _inputs: tempfile::TempDir,
    input_paths: Vec<PathBuf>,
}

impl Judge {
    pub fn new(sandbox: Arc<Sandbox>, toolchains: Vec<ToolchainSpec>, work_dir: &Path) -> Result<Self, JudgeError> {
        let scratch = work_dir.join("runs");
        fs::create_dir_all(&scratch).map_err(|e| io_err(&scratch, e))?;
        Ok(Judge {
            sandbox,
            toolchains: toolchains.into_iter().map(|t| (t.toolchain_id.clone(), t)).collect(),
            build: BuildCache::new(work_dir.join("build"))?,
            scratch,
            options: JudgeOptions::default(),
        })
    }

    pub fn toolchain(&self, id: &str) -> Option<&ToolchainSpec> {
        self.toolchains.get(id)
    }

    /// Resolves a problem's checker. External checkers given as source files
    /// (matching a known toolchain suffix) are compiled first.
    pub fn resolve_checker(&self, kind: &CheckerKind) -> Result<Checker, JudgeError> {
        match kind {
            CheckerKind::TokenCompare => Ok(Checker::TokenCompare),
            CheckerKind::External { program } => {
                let name = program.to_string_lossy();
                if let Some(t) = self.toolchains.values().find(|t| name.ends_with(&t.source_suffix)) {
                    let source = fs::read_to_string(program).map_err(|e| io_err(program, e))?;
                    Ok(Checker::External(compile_component(&source, t, &self.build)?))
                } else {
                    Ok(Checker::External(program.clone()))
                }
            }
        }
    }

    fn prepare(
        &self,
        submission: &Submission,
        suite: &TestSuite,
        problem: &Problem,
    ) -> Result<Result<Prepared, ToolchainError>, JudgeError> {
        if !suite.is_complete() {
            return Err(JudgeError::IncompleteSuite(suite.label.clone()));
        }
        let toolchain = self.toolchains.get(&submission.toolchain_id).ok_or_else(|| JudgeError::UnknownToolchain {
            submission: submission.id.clone(),
            toolchain: submission.toolchain_id.clone(),
        })?;
        let exe = match compile_component(&submission.source_text, toolchain, &self.build) {
            Ok(exe) => exe,
            Err(e @ ToolchainError::CompileError(_)) => return Ok(Err(e)),
            Err(e) => return Err(e.into()),
        };
        let checker = self.resolve_checker(&problem.checker)?;
        let inputs = tempfile::Builder::new().prefix("judge-").tempdir_in(&self.scratch).map_err(|e| io_err(&self.scratch, e))?;
        let mut input_paths = Vec::with_capacity(suite.len());
        for case in &suite.cases {
            let p = inputs.path().join(&case.input_name);
            fs::write(&p, &case.input).map_err(|e| io_err(&p, e))?;
            input_paths.push(p);
        }
        Ok(Ok(Prepared { exe, checker, _inputs: inputs, input_paths }))
    }

    fn judge_case(&self, prepared: &Prepared, case: &TestCase, input: &Path, limits: &Limits) -> Result<TestVerdict, JudgeError> {
        let run = || -> Result<TestVerdict, JudgeError> {
            let spec = ExecSpec::new([prepared.exe.as_os_str()], &self.scratch, *limits).stdin(input);
            let outcome = self.sandbox.run(&spec)?;
            let actual = outcome.read_stdout().map_err(|e| io_err(&outcome.stdout_path, e));
            let verdict = actual.and_then(|a| verdict_of(&outcome, case, &a, &prepared.checker));
            outcome.cleanup();
            Ok(TestVerdict { index: case.index, verdict: verdict?, cpu_ms: outcome.cpu_ms, peak_mem_mib: outcome.peak_mem_mib })
        };
        let first = run()?;
        let Some(band) = self.options.jitter_band else {
            return Ok(first);
        };
        let tl = limits.time_limit_ms() as f64;
        let near_limit = first.verdict != Verdict::TLE && (first.cpu_ms as f64) >= (1.0 - band) * tl;
        if !near_limit {
            return Ok(first);
        }
        let second = run()?;
        log::debug!("test {} near the time limit: {} ms then {} ms", case.index, first.cpu_ms, second.cpu_ms);
        Ok(worse(first, second))
    }

    /// Compiles once and runs every test. Compile errors become a
    /// `compile_failed` result rather than an error.
    pub fn judge_submission(&self, submission: &Submission, suite: &TestSuite, problem: &Problem) -> Result<SuiteResult, JudgeError> {
        let prepared = match self.prepare(submission, suite, problem)? {
            Ok(p) => p,
            Err(_) => return Ok(SuiteResult::compile_failure(&submission.id, &suite.label)),
        };
        let jobs: Vec<(&TestCase, &PathBuf)> = suite.cases.iter().zip(&prepared.input_paths).collect();
        let results = self.sandbox.map(&jobs, |(case, input)| self.judge_case(&prepared, case, input, &problem.limits));
        let per_test = results.into_iter().collect::<Result<Vec<_>, _>>()?;
        Ok(SuiteResult { submission_id: submission.id.clone(), suite_label: suite.label.clone(), per_test, compile_failed: false })
    }

    /// Fast mode: runs tests in index order and stops at the first failure.
    /// `Ok(None)` means every test was accepted.
    pub fn first_failure(&self, submission: &Submission, suite: &TestSuite, problem: &Problem) -> Result<Option<FirstFailure>, JudgeError> {
        let prepared = match self.prepare(submission, suite, problem)? {
            Ok(p) => p,
            Err(_) => return Ok(Some(FirstFailure::CompileFailed)),
        };
        for (case, input) in suite.cases.iter().zip(&prepared.input_paths) {
            let v = self.judge_case(&prepared, case, input, &problem.limits)?;
            if v.verdict != Verdict::AC {
                return Ok(Some(FirstFailure::Test(v)));
            }
        }
        Ok(None)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum FirstFailure {
    CompileFailed,
    Test(TestVerdict),
}

fn worse(a: TestVerdict, b: TestVerdict) -> TestVerdict {
    let key = |v: &TestVerdict| (v.verdict.severity(), v.cpu_ms);
    if key(&b) > key(&a) {
        b
    } else {
        a
    }
}

/// One line of judging output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JudgeRecord {
    pub submission_id: String,
    pub suite_label: String,
    /// `None` only for compile failures, which have no tests.
    pub test_index: Option<usize>,
    pub verdict: Option<Verdict>,
    pub cpu_ms: u64,
    pub peak_mem_mib: f64,
    pub compile_failed: bool,
}

pub fn results_to_jsonl(results: &[SuiteResult]) -> String {
    let mut out = String::new();
    for r in results {
        let records: Vec<JudgeRecord> = if r.compile_failed {
            vec![JudgeRecord {
                submission_id: r.submission_id.clone(),
                suite_label: r.suite_label.clone(),
                test_index: None,
                verdict: None,
                cpu_ms: 0,
                peak_mem_mib: 0.0,
                compile_failed: true,
            }]
        } else {
            r.per_test
                .iter()
                .map(|t| JudgeRecord {
                    submission_id: r.submission_id.clone(),
                    suite_label: r.suite_label.clone(),
                    test_index: Some(t.index),
                    verdict: Some(t.verdict),
                    cpu_ms: t.cpu_ms,
                    peak_mem_mib: t.peak_mem_mib,
                    compile_failed: false,
                })
                .collect()
        };
        for rec in records {
            out.push_str(&serde_json::to_string(&rec).expect("record serializes"));
            out.push('\n');
        }
    }
    out
}

/// Groups records back into results, in order of first appearance.
pub fn results_from_jsonl(text: &str) -> Result<Vec<SuiteResult>, serde_json::Error> {
    let mut order: Vec<(String, String)> = Vec::new();
    let mut by_key: BTreeMap<(String, String), SuiteResult> = BTreeMap::new();
    for line in text.lines().filter(|l| !l.trim().is_empty()) {
        let rec: JudgeRecord = serde_json::from_str(line)?;
        let key = (rec.submission_id.clone(), rec.suite_label.clone());
        let entry = by_key.entry(key.clone()).or_insert_with(|| {
            order.push(key);
            SuiteResult {
                submission_id: rec.submission_id.clone(),
                suite_label: rec.suite_label.clone(),
                per_test: Vec::new(),
                compile_failed: false,
            }
        });
        if rec.compile_failed {
            entry.compile_failed = true;
        } else if let (Some(index), Some(verdict)) = (rec.test_index, rec.verdict) {
            entry.per_test.push(TestVerdict { index, verdict, cpu_ms: rec.cpu_ms, peak_mem_mib: rec.peak_mem_mib });
        }
    }
    Ok(order.into_iter().map(|k| by_key.remove(&k).unwrap()).collect())
}
