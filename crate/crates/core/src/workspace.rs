//! The workspace config file and the on-disk problem layout it points at.
//!
//! ```text
//! {problems_root}/{id}/problem.json     limits, checker, tags
//! {problems_root}/{id}/statement.md
//! {problems_root}/{id}/bounds.json      optional lint sidecar
//! {problems_root}/{id}/solutions/*.cpp  reference.cpp is the model solution
//! {problems_root}/{id}/suites/{label}/
//! {problems_root}/{id}/bundle/          optional committed bundle
//! {work_dir}/{id}/bundle/               bundle written by `forge prompt`
//! {work_dir}/{id}/suites/{label}/       suites written by `forge build`
//! ```
//!
//! Relative paths in the config resolve against the config file's directory.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exchange::RemoteEndpoint;
use crate::forge::{read_suite, Forge};
use crate::judge::Judge;
use crate::llm::{CostLedger, HttpTransport, LlmClient, Mode, PriceTable, TranscriptCache, DEFAULT_API_KEY_ENV};
use crate::model::{CheckerKind, Limits, Origin, Problem, Submission, TestSuite};
use crate::prompt::{ConstraintSidecar, GeneratorBundle, PromptVersion, DEFAULT_CASE_COUNT};
use crate::sandbox::Sandbox;
use crate::toolchain::ToolchainSpec;

/// Conventional file name of the workspace config.
pub const CONFIG_FILE: &str = "judgeforge.json";
/// Solution file stem of the model solution.
pub const MODEL_SOLUTION: &str = "reference";
pub const ORIGINAL_SUITE: &str = "original";

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {reason}")]
    Io { path: PathBuf, reason: String },
    #[error("{path}: {reason}")]
    Parse { path: PathBuf, reason: String },
    #[error("invalid workspace config: {0}")]
    Invalid(String),
    #[error("path referenced by the config does not exist: {0}")]
    MissingPath(PathBuf),
    #[error("unknown problem `{0}`")]
    UnknownProblem(String),
    #[error("problem `{problem}` has no suite `{label}`")]
    UnknownSuite { problem: String, label: String },
}

fn default_case_count() -> usize {
    DEFAULT_CASE_COUNT
}

fn default_workers() -> usize {
    1
}

fn default_work_dir() -> PathBuf {
    PathBuf::from(".judgeforge")
}

fn default_api_key_env() -> String {
    DEFAULT_API_KEY_ENV.to_string()
}

fn default_timeout_ms() -> u64 {
    300_000
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LlmConfig {
    pub base_url: String,
    pub model_id: String,
    pub price_table: PathBuf,
    pub cache_dir: PathBuf,
    #[serde(default = "default_api_key_env")]
    pub api_key_env: String,
    #[serde(default)]
    pub prompt_version: PromptVersion,
    #[serde(default = "default_timeout_ms")]
    pub timeout_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WorkspaceConfig {
    pub problems_root: PathBuf,
    #[serde(default = "default_work_dir")]
    pub work_dir: PathBuf,
    pub toolchains: Vec<ToolchainSpec>,
    pub llm: LlmConfig,
    #[serde(default = "default_workers")]
    pub workers: usize,
    #[serde(default = "default_case_count")]
    pub case_count: usize,
    #[serde(default)]
    pub remote: Option<RemoteEndpoint>,
}

#[derive(Deserialize)]
struct ProblemFile {
    id: String,
    limits: Limits,
    #[serde(default)]
    checker: CheckerKind,
    #[serde(default)]
    tags: Vec<String>,
}

/// A loaded config with every path made absolute.
#[derive(Debug, Clone)]
pub struct Workspace {
    pub config: WorkspaceConfig,
}

fn read(path: &Path) -> Result<String, ConfigError> {
    fs::read_to_string(path).map_err(|e| ConfigError::Io { path: path.to_path_buf(), reason: e.to_string() })
}

impl Workspace {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = read(path)?;
        let config: WorkspaceConfig =
            serde_json::from_str(&text).map_err(|e| ConfigError::Parse { path: path.to_path_buf(), reason: e.to_string() })?;
        let base = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
        let base = base.canonicalize().map_err(|e| ConfigError::Io { path: base.to_path_buf(), reason: e.to_string() })?;
        Self::from_config(config, &base)
    }

    /// Resolves relative paths against `base` and validates.
    pub fn from_config(mut config: WorkspaceConfig, base: &Path) -> Result<Self, ConfigError> {
        let abs = |p: &Path| if p.is_absolute() { p.to_path_buf() } else { base.join(p) };
        config.problems_root = abs(&config.problems_root);
        config.work_dir = abs(&config.work_dir);
        config.llm.price_table = abs(&config.llm.price_table);
        config.llm.cache_dir = abs(&config.llm.cache_dir);
        for p in [&config.problems_root, &config.llm.price_table, &config.llm.cache_dir] {
            if !p.exists() {
                return Err(ConfigError::MissingPath(p.clone()));
            }
        }
        if config.workers == 0 {
            return Err(ConfigError::Invalid("workers must be at least 1".into()));
        }
        if config.case_count == 0 {
            return Err(ConfigError::Invalid("case_count must be at least 1".into()));
        }
        if config.toolchains.is_empty() {
            return Err(ConfigError::Invalid("at least one toolchain is required".into()));
        }
        let mut ids = BTreeSet::new();
        for t in &config.toolchains {
            t.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
            if !ids.insert(t.toolchain_id.as_str()) {
                return Err(ConfigError::Invalid(format!("duplicate toolchain `{}`", t.toolchain_id)));
            }
        }
        if let Some(remote) = &config.remote {
            remote.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        }
        Ok(Workspace { config })
    }

    /// Walks up from `start` looking for [`CONFIG_FILE`].
    pub fn discover(start: &Path) -> Option<PathBuf> {
        start.ancestors().map(|d| d.join(CONFIG_FILE)).find(|p| p.is_file())
    }

    pub fn default_toolchain(&self) -> &ToolchainSpec {
        &self.config.toolchains[0]
    }

    pub fn problem_dir(&self, id: &str) -> PathBuf {
        self.config.problems_root.join(id)
    }

    pub fn work_dir(&self, id: &str) -> PathBuf {
        self.config.work_dir.join(id)
    }

    /// Directory names under the problems root that contain a `problem.json`.
    pub fn problem_ids(&self) -> Result<Vec<String>, ConfigError> {
        let root = &self.config.problems_root;
        let entries = fs::read_dir(root).map_err(|e| ConfigError::Io { path: root.clone(), reason: e.to_string() })?;
        let mut ids: Vec<String> = entries
            .filter_map(Result::ok)
            .filter(|e| e.path().join("problem.json").is_file())
            .map(|e| e.file_name().to_string_lossy().into_owned())
            .collect();
        ids.sort();
        Ok(ids)
    }

    pub fn load_problem(&self, id: &str) -> Result<Problem, ConfigError> {
        let dir = self.problem_dir(id);
        let meta = dir.join("problem.json");
        if !meta.is_file() {
            return Err(ConfigError::UnknownProblem(id.to_string()));
        }
        let file: ProblemFile =
            serde_json::from_str(&read(&meta)?).map_err(|e| ConfigError::Parse { path: meta.clone(), reason: e.to_string() })?;
        if file.id != id {
            return Err(ConfigError::Invalid(format!("{} declares id `{}`", meta.display(), file.id)));
        }
        let statement = read(&dir.join("statement.md"))?;
        let mut problem = Problem::new(file.id, statement, file.limits).map_err(|e| ConfigError::Invalid(e.to_string()))?;
        problem.checker = match file.checker {
            CheckerKind::External { program } if program.is_relative() => CheckerKind::External { program: dir.join(program) },
            other => other,
        };
        problem.tags = file.tags;
        Ok(problem)
    }

    /// Every solution of a problem, sorted by id. Ids are file stems.
    pub fn solutions(&self, id: &str) -> Result<Vec<Submission>, ConfigError> {
        let dir = self.problem_dir(id).join("solutions");
        let toolchains = &self.config.toolchains;
        let entries = fs::read_dir(&dir).map_err(|e| ConfigError::Io { path: dir.clone(), reason: e.to_string() })?;
        let mut subs = Vec::new();
        for entry in entries.filter_map(Result::ok) {
            let path = entry.path();
            let name = path.file_name().unwrap().to_string_lossy().into_owned();
            let Some(tc) = toolchains.iter().find(|t| name.ends_with(&t.source_suffix)) else {
                continue;
            };
            let stem = &name[..name.len() - tc.source_suffix.len()];
            let sub = Submission::new(stem, read(&path)?, tc.toolchain_id.clone(), Origin::Fixture)
                .map_err(|e| ConfigError::Invalid(e.to_string()))?;
            subs.push(sub);
        }
        subs.sort_by(|a, b| a.id.cmp(&b.id));
        Ok(subs)
    }

    pub fn model_solution(&self, id: &str) -> Result<Submission, ConfigError> {
        self.solutions(id)?
            .into_iter()
            .find(|s| s.id == MODEL_SOLUTION)
            .ok_or_else(|| ConfigError::MissingPath(self.problem_dir(id).join("solutions").join(MODEL_SOLUTION)))
    }

    /// The submission corpus used for differential judging: every solution
    /// except the model solution.
    pub fn corpus(&self, id: &str) -> Result<Vec<Submission>, ConfigError> {
        Ok(self.solutions(id)?.into_iter().filter(|s| s.id != MODEL_SOLUTION).collect())
    }

    pub fn sidecar(&self, id: &str) -> Result<Option<ConstraintSidecar>, ConfigError> {
        let path = self.problem_dir(id).join("bounds.json");
        if !path.is_file() {
            return Ok(None);
        }
        ConstraintSidecar::from_file(&path).map(Some).map_err(|e| ConfigError::Parse { path, reason: e.to_string() })
    }

    /// Where `forge prompt` writes a bundle.
    pub fn bundle_out_dir(&self, id: &str) -> PathBuf {
        self.work_dir(id).join("bundle")
    }

    /// The prompted bundle if present, else the committed one.
    pub fn bundle_dir(&self, id: &str) -> Option<PathBuf> {
        [self.bundle_out_dir(id), self.problem_dir(id).join("bundle")].into_iter().find(|d| d.is_dir())
    }

    pub fn load_bundle(&self, id: &str) -> Result<GeneratorBundle, ConfigError> {
        let dir = self.bundle_dir(id).ok_or_else(|| ConfigError::MissingPath(self.bundle_out_dir(id)))?;
        GeneratorBundle::read_dir(&dir).map_err(|e| ConfigError::Parse { path: dir, reason: e.to_string() })
    }

    /// Forged suites in the work dir take precedence over committed ones.
    pub fn suite_dir(&self, id: &str, label: &str) -> Option<PathBuf> {
        [self.work_dir(id).join("suites").join(label), self.problem_dir(id).join("suites").join(label)].into_iter().find(|d| d.is_dir())
    }

    pub fn load_suite(&self, id: &str, label: &str) -> Result<TestSuite, ConfigError> {
        let dir =
            self.suite_dir(id, label).ok_or_else(|| ConfigError::UnknownSuite { problem: id.to_string(), label: label.to_string() })?;
        read_suite(&dir).map_err(|e| ConfigError::Parse { path: dir, reason: e.to_string() })
    }

    pub fn sandbox(&self) -> Result<Arc<Sandbox>, ConfigError> {
        Sandbox::new(self.config.workers).map(Arc::new).map_err(|e| ConfigError::Invalid(e.to_string()))
    }

    pub fn forge(&self, sandbox: Arc<Sandbox>) -> Result<Forge, ConfigError> {
        Forge::new(sandbox, self.default_toolchain().clone(), &self.config.work_dir).map_err(|e| ConfigError::Invalid(e.to_string()))
    }

    pub fn judge(&self, sandbox: Arc<Sandbox>) -> Result<Judge, ConfigError> {
        Judge::new(sandbox, self.config.toolchains.clone(), &self.config.work_dir).map_err(|e| ConfigError::Invalid(e.to_string()))
    }

    /// An LLM client. Replay mode gets no transport at all, so it cannot
    /// reach the network even by mistake.
    pub fn llm_client(&self, mode: Mode) -> LlmClient {
        let cache = TranscriptCache::new(&self.config.llm.cache_dir);
        if mode == Mode::Replay {
            return LlmClient::offline(cache);
        }
        let llm = &self.config.llm;
        let key = std::env::var(&llm.api_key_env).ok();
        let transport = HttpTransport::new(&llm.base_url, key, std::time::Duration::from_millis(llm.timeout_ms));
        LlmClient::new(cache, Some(Box::new(transport)))
    }

    pub fn price_table(&self) -> Result<PriceTable, ConfigError> {
        PriceTable::from_file(&self.config.llm.price_table)
            .map_err(|e| ConfigError::Parse { path: self.config.llm.price_table.clone(), reason: e.to_string() })
    }

    pub fn ledger_path(&self) -> PathBuf {
        self.config.work_dir.join("cost.jsonl")
    }

    pub fn ledger(&self) -> Result<CostLedger, ConfigError> {
        let path = self.ledger_path();
        if !path.exists() {
            return Ok(CostLedger::new());
        }
        CostLedger::load(&path).map_err(|e| ConfigError::Parse { path, reason: e.to_string() })
    }
}
