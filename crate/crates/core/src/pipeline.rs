//! The end-to-end steps behind the command line: prompt, forge, judge and
//! report, each operating on a [`Workspace`].
//!
//! Every step writes its artifacts under the work dir and is idempotent:
//! re-running on unchanged inputs in replay mode rewrites the same bytes.

use std::collections::BTreeMap;
use std::fs;
use std::path::PathBuf;

use rust_decimal::Decimal;
use thiserror::Error;

use crate::diffeval::{bucket_distribution, diff_problem, verdict_histogram, DiffError, DiffRow, Report, VerdictHistogram};
use crate::exchange::ExchangeError;
use crate::forge::{write_suite, Forge, ForgeReport, StageError};
use crate::judge::{results_from_jsonl, results_to_jsonl, Judge, JudgeError};
use crate::llm::{cost_of, ChatExchange, CostLedger, LedgerEntry, LlmError, Mode};
use crate::model::SuiteResult;
use crate::prompt::{
    lint_bundle, parse_bundle, render_prompt, BundleError, Finding, GeneratorBundle, PromptContext, PromptError, PromptTemplate,
};
use crate::workspace::{ConfigError, Workspace, ORIGINAL_SUITE};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Llm(#[from] LlmError),
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error(transparent)]
    Bundle(#[from] BundleError),
    #[error(transparent)]
    Forge(#[from] StageError),
    #[error(transparent)]
    Judge(#[from] JudgeError),
    #[error(transparent)]
    Diff(#[from] DiffError),
    #[error(transparent)]
    Exchange(#[from] ExchangeError),
    #[error("network access is forbidden in replay mode")]
    NetworkForbidden,
    #[error("fixture annotation violated: {0}")]
    AnnotationViolated(String),
    #[error("no results for `{problem}` on suite `{label}`; run `judge run` first")]
    MissingResults { problem: String, label: String },
    #[error("i/o error: {0}")]
    Io(String),
}

/// Process exit codes, one per error family.
pub const EXIT_CODES: [(i32, &str); 12] = [
    (0, "success"),
    (1, "i/o or internal error"),
    (2, "usage error"),
    (3, "workspace config error"),
    (4, "LLM gateway error (cache miss, provider error, timeout)"),
    (5, "prompt or bundle error"),
    (6, "forge stage failed"),
    (7, "judge error"),
    (8, "differential evaluation error"),
    (9, "archive or remote error"),
    (10, "network forbidden in replay mode"),
    (11, "fixture annotation violated"),
];

impl PipelineError {
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Io(_) => 1,
            PipelineError::Config(_) => 3,
            PipelineError::Llm(_) => 4,
            PipelineError::Prompt(_) | PipelineError::Bundle(_) => 5,
            PipelineError::Forge(_) => 6,
            PipelineError::Judge(_) => 7,
            PipelineError::Diff(_) | PipelineError::MissingResults { .. } => 8,
            PipelineError::Exchange(_) => 9,
            PipelineError::NetworkForbidden => 10,
            PipelineError::AnnotationViolated(_) => 11,
        }
    }
}

pub fn io_error(path: &std::path::Path, e: std::io::Error) -> PipelineError {
    PipelineError::Io(format!("{}: {e}", path.display()))
}

/// The prompt for a problem, rendered with the workspace's template version
/// and requested case count.
pub fn render_for(ws: &Workspace, problem_id: &str) -> Result<String, PipelineError> {
    let problem = ws.load_problem(problem_id)?;
    let template = PromptTemplate::builtin(ws.config.llm.prompt_version);
    let mut ctx = PromptContext::new(problem.statement_markdown).with_exemplars();
    ctx.requested_case_count = ws.config.case_count;
    Ok(render_prompt(&template, &ctx)?)
}

#[derive(Debug, Clone)]
pub struct PromptRun {
    pub exchange: ChatExchange,
    pub bundle: GeneratorBundle,
    pub findings: Vec<Finding>,
    pub bundle_dir: PathBuf,
    pub cost_usd: Decimal,
}

/// Renders, asks the model (or replays), parses and lints, then writes the
/// bundle and records the cost once per distinct exchange.
pub fn forge_prompt(ws: &Workspace, problem_id: &str, mode: Mode) -> Result<PromptRun, PipelineError> {
    let prompt = render_for(ws, problem_id)?;
    let client = ws.llm_client(mode);
    let exchange = client.complete(&ws.config.llm.model_id, &prompt, mode)?;
    let bundle = parse_bundle(&exchange.response, ws.config.case_count)?;
    let findings = lint_bundle(&bundle, ws.sidecar(problem_id)?.as_ref());
    let bundle_dir = ws.bundle_out_dir(problem_id);
    bundle.write_dir(&bundle_dir)?;

    let prices = ws.price_table()?;
    let cost_usd = cost_of(&exchange, &prices)?;
    let ledger_path = ws.ledger_path();
    let key = exchange.key();
    if !ws.ledger()?.entries.iter().any(|e| e.exchange == key) {
        let entry = LedgerEntry {
            exchange: key,
            model_id: exchange.model_id.clone(),
            input_tokens: exchange.input_tokens,
            output_tokens: exchange.output_tokens,
            estimated: exchange.tokens_estimated,
            cost_usd,
        };
        CostLedger::append_to(&ledger_path, &entry).map_err(|e| io_error(&ledger_path, e))?;
    }
    Ok(PromptRun { exchange, bundle, findings, bundle_dir, cost_usd })
}

/// Forges the generated suite from the problem's bundle and writes it under
/// the work dir. Returns the report and the suite directory.
pub fn forge_build(ws: &Workspace, forge: &Forge, problem_id: &str) -> Result<(ForgeReport, PathBuf), PipelineError> {
    let problem = ws.load_problem(problem_id)?;
    let bundle = ws.load_bundle(problem_id)?;
    let model = ws.model_solution(problem_id)?;
    let report = forge.forge_suite(&problem, &bundle, &model)?;
    let suite = report.suite.as_ref().expect("forge_suite returns the suite");
    let dir = write_suite(&ws.work_dir(problem_id), suite, Some(&report)).map_err(|e| PipelineError::Io(e.to_string()))?;
    Ok((report, dir))
}

pub fn results_path(ws: &Workspace, problem_id: &str, label: &str) -> PathBuf {
    ws.work_dir(problem_id).join("results").join(format!("{label}.jsonl"))
}

/// Judges the problem's corpus on one suite and stores the results.
pub fn judge_suite(ws: &Workspace, judge: &Judge, problem_id: &str, label: &str) -> Result<Vec<SuiteResult>, PipelineError> {
    let problem = ws.load_problem(problem_id)?;
    let suite = ws.load_suite(problem_id, label)?;
    let mut results = Vec::new();
    for sub in ws.corpus(problem_id)? {
        log::info!("judging {problem_id}/{} on {label}", sub.id);
        results.push(judge.judge_submission(&sub, &suite, &problem)?);
    }
    let path = results_path(ws, problem_id, label);
    fs::create_dir_all(path.parent().unwrap()).map_err(|e| io_error(&path, e))?;
    fs::write(&path, results_to_jsonl(&results)).map_err(|e| io_error(&path, e))?;
    Ok(results)
}

pub fn load_results(ws: &Workspace, problem_id: &str, label: &str) -> Result<Vec<SuiteResult>, PipelineError> {
    let path = results_path(ws, problem_id, label);
    let missing = || PipelineError::MissingResults { problem: problem_id.to_string(), label: label.to_string() };
    let text = fs::read_to_string(&path).map_err(|_| missing())?;
    results_from_jsonl(&text).map_err(|e| PipelineError::Io(format!("{}: {e}", path.display())))
}

/// Per-problem rows, their bucket distribution and the verdict histogram of
/// newly failed solutions, from stored `original` and `ai_label` results.
pub fn differential_report(ws: &Workspace, problem_ids: &[String], ai_label: &str) -> Result<Report, PipelineError> {
    let mut rows: Vec<DiffRow> = Vec::new();
    let mut histogram = VerdictHistogram::default();
    for id in problem_ids {
        let original = load_results(ws, id, ORIGINAL_SUITE)?;
        let ai = load_results(ws, id, ai_label)?;
        rows.push(diff_problem(id, &original, &ai)?);
        histogram.merge(&verdict_histogram(&original, &ai)?);
    }
    Ok(report_of(rows, Some(histogram)))
}

/// Wraps rows into a report with the `all` distribution.
pub fn report_of(rows: Vec<DiffRow>, histogram: Option<VerdictHistogram>) -> Report {
    let mut distributions = BTreeMap::new();
    distributions.insert("all".to_string(), bucket_distribution(&rows));
    let mut histograms = BTreeMap::new();
    if let Some(h) = histogram {
        histograms.insert("all".to_string(), h);
    }
    Report { rows, distributions, histograms }
}
