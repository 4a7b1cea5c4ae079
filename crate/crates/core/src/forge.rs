//! Bundle to validated suite: compile, generate, validate, re-generate for
//! determinism, then run the model solution for expected outputs.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{normalize_names, parse_case_name, Limits, Problem, Submission, TestCase, TestSuite, EXPECTED_SUFFIX};
use crate::prompt::GeneratorBundle;
use crate::sandbox::{ExecSpec, RunOutcome, Sandbox, SandboxError};
use crate::toolchain::{compile_component, BuildCache, ToolchainError, ToolchainSpec};

pub const DEFAULT_RELAXATION: f64 = 2.0;
pub const AI_SUITE_LABEL: &str = "ai";
pub const REPORT_FILE: &str = "forge_report.json";

#[derive(Debug, Error)]
pub enum ForgeError {
    #[error(transparent)]
    Toolchain(#[from] ToolchainError),
    #[error("generator failed on row {row}: {}", describe(.outcome))]
    GeneratorFailed { row: usize, outcome: Box<RunOutcome> },
    #[error("validator rejected case {index}: {message}")]
    ValidationFailed { index: usize, message: String },
    #[error("generator is not deterministic: row {row} produced different bytes on the second pass")]
    NonDeterministic { row: usize },
    #[error("model solution failed on case {index}: {}", describe(.outcome))]
    ModelSolutionFailed { index: usize, outcome: Box<RunOutcome> },
    #[error("empty parameter list")]
    NoRows,
    #[error(transparent)]
    Sandbox(#[from] SandboxError),
    #[error("forge i/o error: {0}")]
    Io(String),
}

fn describe(o: &RunOutcome) -> String {
    let mut s = format!("{:?}, cpu {} ms, peak {:.1} MiB", o.exit_status, o.cpu_ms, o.peak_mem_mib);
    if o.flags.any() {
        s.push_str(&format!(", flags {:?}", o.flags));
    }
    if !o.stderr_excerpt.trim().is_empty() {
        s.push_str(&format!(", stderr: {}", o.stderr_excerpt.trim()));
    }
    s
}

fn io_err(path: &Path, e: std::io::Error) -> ForgeError {
    ForgeError::Io(format!("{}: {e}", path.display()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    CompileGenerator,
    CompileValidator,
    CompileModel,
    Generate,
    Validate,
    Determinism,
    Expected,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::CompileGenerator => "compile-generator",
            Stage::CompileValidator => "compile-validator",
            Stage::CompileModel => "compile-model",
            Stage::Generate => "generate",
            Stage::Validate => "validate",
            Stage::Determinism => "determinism",
            Stage::Expected => "expected",
        })
    }
}

#[derive(Debug, Error)]
#[error("forge stage {stage} failed: {error}")]
pub struct StageError {
    pub stage: Stage,
    pub error: ForgeError,
}

trait AtStage<T> {
    fn at(self, stage: Stage) -> Result<T, StageError>;
}

impl<T, E: Into<ForgeError>> AtStage<T> for Result<T, E> {
    fn at(self, stage: Stage) -> Result<T, StageError> {
        self.map_err(|e| StageError { stage, error: e.into() })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationRecord {
    pub index: usize,
    pub pass: bool,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseReport {
    pub index: usize,
    pub input_name: String,
    pub params: String,
    /// Measured, so left out of the written report to keep it reproducible.
    #[serde(skip)]
    pub generator_cpu_ms: u64,
    pub validator_pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForgeReport {
    #[serde(skip)]
    pub suite: Option<TestSuite>,
    pub problem_id: String,
    pub suite_label: String,
    pub per_case: Vec<CaseReport>,
    pub model_solution_id: String,
    pub determinism_checked: bool,
}

#[derive(Debug, Clone)]
pub struct ForgeOptions {
    /// Limits for generator and validator runs.
    pub tool_limits: Limits,
    /// Time multiplier applied to the problem limits for the model solution.
    pub relaxation: f64,
    pub label: String,
}

impl Default for ForgeOptions {
    fn default() -> Self {
        ForgeOptions {
            tool_limits: Limits::new(10_000, 1024, 64 << 20).expect("static limits"),
            relaxation: DEFAULT_RELAXATION,
            label: AI_SUITE_LABEL.to_string(),
        }
    }
}

/// Shared state for one forging session: the worker pool, a build cache and
/// a scratch root for run directories.
pub struct Forge {
    sandbox: Arc<Sandbox>,
    toolchain: ToolchainSpec,
    build: BuildCache,
    scratch: PathBuf,
    pub options: ForgeOptions,
}

impl Forge {
    pub fn new(sandbox: Arc<Sandbox>, toolchain: ToolchainSpec, work_dir: &Path) -> Result<Self, ForgeError> {
        let scratch = work_dir.join("runs");
        fs::create_dir_all(&scratch).map_err(|e| io_err(&scratch, e))?;
        Ok(Forge { sandbox, toolchain, build: BuildCache::new(work_dir.join("build"))?, scratch, options: ForgeOptions::default() })
    }

    pub fn toolchain(&self) -> &ToolchainSpec {
        &self.toolchain
    }

    pub fn build_cache(&self) -> &BuildCache {
        &self.build
    }

    pub fn compile(&self, source: &str) -> Result<PathBuf, ForgeError> {
        Ok(compile_component(source, &self.toolchain, &self.build)?)
    }

    fn stage_inputs(&self, cases: &[TestCase]) -> Result<(tempfile::TempDir, Vec<PathBuf>), ForgeError> {
        let dir = tempfile::Builder::new().prefix("inputs-").tempdir_in(&self.scratch).map_err(|e| io_err(&self.scratch, e))?;
        let mut paths = Vec::with_capacity(cases.len());
        for case in cases {
            let p = dir.path().join(&case.input_name);
            fs::write(&p, &case.input).map_err(|e| io_err(&p, e))?;
            paths.push(p);
        }
        Ok((dir, paths))
    }

    /// Runs the generator once per row; row `i` becomes case `i`.
    pub fn generate_inputs(&self, generator: &Path, param_rows: &[String], limits: &Limits) -> Result<Vec<(TestCase, u64)>, ForgeError> {
        if param_rows.is_empty() {
            return Err(ForgeError::NoRows);
        }
        let rows: Vec<(usize, &String)> = param_rows.iter().enumerate().map(|(i, r)| (i + 1, r)).collect();
        let results = self.sandbox.map(&rows, |(row, params)| -> Result<(Vec<u8>, u64), ForgeError> {
            let mut argv = vec![generator.as_os_str().to_owned()];
            argv.extend(params.split_whitespace().map(Into::into));
            let outcome = self.sandbox.run(&ExecSpec::new(argv, &self.scratch, *limits))?;
            let result = if outcome.is_clean() {
                let bytes = outcome.read_stdout().map_err(|e| io_err(&outcome.stdout_path, e));
                bytes.map(|b| (b, outcome.cpu_ms))
            } else {
                Err(ForgeError::GeneratorFailed { row: *row, outcome: Box::new(outcome.clone()) })
            };
            outcome.cleanup();
            result
        });
        let mut out = Vec::with_capacity(results.len());
        for (i, r) in results.into_iter().enumerate() {
            let (bytes, cpu) = r?;
            out.push((TestCase::new(i + 1, bytes, None), cpu));
        }
        Ok(out)
    }

    /// Feeds each input to the validator. Rejections are data, not errors.
    pub fn validate_inputs(&self, validator: &Path, cases: &[TestCase], limits: &Limits) -> Result<Vec<ValidationRecord>, ForgeError> {
        let (_dir, paths) = self.stage_inputs(cases)?;
        let jobs: Vec<(usize, &PathBuf)> = cases.iter().map(|c| c.index).zip(&paths).collect();
        let results = self.sandbox.map(&jobs, |(index, input)| -> Result<ValidationRecord, ForgeError> {
            let spec = ExecSpec::new([validator.as_os_str()], &self.scratch, *limits).stdin(*input);
            let outcome = self.sandbox.run(&spec)?;
            outcome.cleanup();
            let pass = outcome.is_clean();
            let message = if pass { String::new() } else { describe(&outcome) };
            Ok(ValidationRecord { index: *index, pass, message })
        });
        results.into_iter().collect()
    }

    /// Runs the model solution on every case with the time limit scaled by
    /// `relaxation`. Any unclean run aborts.
    pub fn produce_expected(
        &self,
        model_solution: &Submission,
        cases: &[TestCase],
        limits: &Limits,
        relaxation: f64,
    ) -> Result<Vec<TestCase>, ForgeError> {
        let exe = self.compile(&model_solution.source_text)?;
        self.produce_expected_with(&exe, cases, limits, relaxation)
    }

    pub fn produce_expected_with(
        &self,
        exe: &Path,
        cases: &[TestCase],
        limits: &Limits,
        relaxation: f64,
    ) -> Result<Vec<TestCase>, ForgeError> {
        let limits = limits.with_time_scaled(relaxation);
        let (_dir, paths) = self.stage_inputs(cases)?;
        let jobs: Vec<(&TestCase, &PathBuf)> = cases.iter().zip(&paths).collect();
        let results = self.sandbox.map(&jobs, |(case, input)| -> Result<TestCase, ForgeError> {
            let spec = ExecSpec::new([exe.as_os_str()], &self.scratch, limits).stdin(*input);
            let outcome = self.sandbox.run(&spec)?;
            let result = if outcome.is_clean() {
                outcome
                    .read_stdout()
                    .map(|out| TestCase { expected: Some(out), ..(*case).clone() })
                    .map_err(|e| io_err(&outcome.stdout_path, e))
            } else {
                Err(ForgeError::ModelSolutionFailed { index: case.index, outcome: Box::new(outcome.clone()) })
            };
            outcome.cleanup();
            result
        });
        results.into_iter().collect()
    }

    /// The full pipeline. Fails at the first stage that does not succeed.
    pub fn forge_suite(&self, problem: &Problem, bundle: &GeneratorBundle, model_solution: &Submission) -> Result<ForgeReport, StageError> {
        let tool_limits = &self.options.tool_limits;
        let generator = self.compile(&bundle.generator_source).at(Stage::CompileGenerator)?;
        let validator = self.compile(&bundle.validator_source).at(Stage::CompileValidator)?;
        let model = self.compile(&model_solution.source_text).at(Stage::CompileModel)?;

        let first = self.generate_inputs(&generator, &bundle.param_rows, tool_limits).at(Stage::Generate)?;
        let cases: Vec<TestCase> = first.iter().map(|(c, _)| c.clone()).collect();

        let validation = self.validate_inputs(&validator, &cases, tool_limits).at(Stage::Validate)?;
        if let Some(bad) = validation.iter().find(|v| !v.pass) {
            return Err(StageError {
                stage: Stage::Validate,
                error: ForgeError::ValidationFailed { index: bad.index, message: bad.message.clone() },
            });
        }

        let second = self.generate_inputs(&generator, &bundle.param_rows, tool_limits).at(Stage::Determinism)?;
        if let Some((c, _)) = first.iter().zip(&second).find(|((a, _), (b, _))| a.input != b.input).map(|(a, _)| a) {
            return Err(StageError { stage: Stage::Determinism, error: ForgeError::NonDeterministic { row: c.index } });
        }

        let with_expected = self.produce_expected_with(&model, &cases, &problem.limits, self.options.relaxation).at(Stage::Expected)?;
        let suite = normalize_names(&TestSuite::new(self.options.label.clone(), with_expected).expect("generated cases are contiguous"));

        let per_case = first
            .iter()
            .zip(&bundle.param_rows)
            .zip(&suite.cases)
            .map(|(((case, cpu), params), named)| CaseReport {
                index: case.index,
                input_name: named.input_name.clone(),
                params: params.clone(),
                generator_cpu_ms: *cpu,
                validator_pass: true,
            })
            .collect();
        Ok(ForgeReport {
            suite: Some(suite),
            problem_id: problem.id.clone(),
            suite_label: self.options.label.clone(),
            per_case,
            model_solution_id: model_solution.id.clone(),
            determinism_checked: true,
        })
    }
}

/// Writes `{root}/suites/{label}/testNN.in` and `.ok` files plus the report.
pub fn write_suite(root: &Path, suite: &TestSuite, report: Option<&ForgeReport>) -> Result<PathBuf, ForgeError> {
    let dir = root.join("suites").join(&suite.label);
    if dir.exists() {
        for entry in fs::read_dir(&dir).map_err(|e| io_err(&dir, e))? {
            let path = entry.map_err(|e| io_err(&dir, e))?.path();
            if path.is_file() {
                fs::remove_file(&path).map_err(|e| io_err(&path, e))?;
            }
        }
    }
    fs::create_dir_all(&dir).map_err(|e| io_err(&dir, e))?;
    for case in &suite.cases {
        let p = dir.join(&case.input_name);
        fs::write(&p, &case.input).map_err(|e| io_err(&p, e))?;
        if let Some(expected) = &case.expected {
            let p = dir.join(case.expected_name());
            fs::write(&p, expected).map_err(|e| io_err(&p, e))?;
        }
    }
    if let Some(report) = report {
        let p = dir.join(REPORT_FILE);
        let json = serde_json::to_string_pretty(report).expect("report serializes");
        fs::write(&p, json + "\n").map_err(|e| io_err(&p, e))?;
    }
    Ok(dir)
}

/// Reads a suite directory written by [`write_suite`] (or laid out the same
/// way by hand). The label is the directory name.
pub fn read_suite(dir: &Path) -> Result<TestSuite, ForgeError> {
    let label = dir.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let mut inputs: Vec<(usize, PathBuf)> = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| io_err(dir, e))? {
        let path = entry.map_err(|e| io_err(dir, e))?.path();
        let name = path.file_name().unwrap().to_string_lossy().into_owned();
        if let Some(index) = parse_case_name(&name) {
            inputs.push((index, path));
        }
    }
    inputs.sort();
    let mut cases = Vec::with_capacity(inputs.len());
    for (index, path) in inputs {
        let input = fs::read(&path).map_err(|e| io_err(&path, e))?;
        let ok = path.with_extension(EXPECTED_SUFFIX);
        let expected = if ok.is_file() { Some(fs::read(&ok).map_err(|e| io_err(&ok, e))?) } else { None };
        let mut case = TestCase::new(index, input, expected);
        case.input_name = path.file_name().unwrap().to_string_lossy().into_owned();
        cases.push(case);
    }
    TestSuite::new(label, cases).map_err(|e| ForgeError::Io(format!("{}: {e}", dir.display())))
}
