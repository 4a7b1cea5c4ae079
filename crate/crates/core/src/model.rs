//! Shared domain types: limits, problems, suites, submissions and verdicts.
//!
//! Everything here is an immutable value once constructed. Constructors
//! validate invariants so downstream code can rely on them.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Longest time limit accepted for a single test, in milliseconds.
pub const MAX_TIME_LIMIT_MS: u64 = 60_000;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ModelError {
    #[error("invalid limits: {0}")]
    InvalidLimits(String),
    #[error("invalid problem: {0}")]
    InvalidProblem(String),
    #[error("invalid test suite `{label}`: {reason}")]
    InvalidSuite { label: String, reason: String },
    #[error("invalid submission `{id}`: {reason}")]
    InvalidSubmission { id: String, reason: String },
    #[error("unknown verdict `{0}`")]
    UnknownVerdict(String),
}

/// Resource ceilings for one execution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawLimits", into = "RawLimits")]
pub struct Limits {
    time_limit_ms: u64,
    memory_limit_mib: u64,
    output_limit_bytes: u64,
}

#[derive(Serialize, Deserialize)]
struct RawLimits {
    time_limit_ms: u64,
    memory_limit_mib: u64,
    output_limit_bytes: u64,
}

impl TryFrom<RawLimits> for Limits {
    type Error = ModelError;

    fn try_from(raw: RawLimits) -> Result<Self, Self::Error> {
        Limits::new(raw.time_limit_ms, raw.memory_limit_mib, raw.output_limit_bytes)
    }
}

impl From<Limits> for RawLimits {
    fn from(l: Limits) -> Self {
        RawLimits { time_limit_ms: l.time_limit_ms, memory_limit_mib: l.memory_limit_mib, output_limit_bytes: l.output_limit_bytes }
    }
}

impl Limits {
    pub fn new(time_limit_ms: u64, memory_limit_mib: u64, output_limit_bytes: u64) -> Result<Self, ModelError> {
        if time_limit_ms == 0 || time_limit_ms > MAX_TIME_LIMIT_MS {
            return Err(ModelError::InvalidLimits(format!("time limit must be in 1..={MAX_TIME_LIMIT_MS} ms, got {time_limit_ms}")));
        }
        if memory_limit_mib == 0 {
            return Err(ModelError::InvalidLimits("memory limit must be positive".into()));
        }
        if output_limit_bytes == 0 {
            return Err(ModelError::InvalidLimits("output limit must be positive".into()));
        }
        Ok(Limits { time_limit_ms, memory_limit_mib, output_limit_bytes })
    }

    pub fn time_limit_ms(&self) -> u64 {
        self.time_limit_ms
    }

    pub fn memory_limit_mib(&self) -> u64 {
        self.memory_limit_mib
    }

    pub fn output_limit_bytes(&self) -> u64 {
        self.output_limit_bytes
    }

    /// Same limits with the time limit scaled by `factor`, clamped to the
    /// accepted range.
    pub fn with_time_scaled(&self, factor: f64) -> Limits {
        let scaled = (self.time_limit_ms as f64 * factor).ceil() as u64;
        Limits { time_limit_ms: scaled.clamp(1, MAX_TIME_LIMIT_MS), ..*self }
    }
}

/// How contestant output is compared against the expected output.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum CheckerKind {
    #[default]
    TokenCompare,
    /// A checker program invoked as `checker <input> <output> <expected>`.
    External { program: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Problem {
    pub id: String,
    pub statement_markdown: String,
    pub limits: Limits,
    #[serde(default)]
    pub checker: CheckerKind,
    #[serde(default)]
    pub tags: Vec<String>,
}

impl Problem {
    pub fn new(id: impl Into<String>, statement_markdown: impl Into<String>, limits: Limits) -> Result<Self, ModelError> {
        let problem = Problem {
            id: id.into(),
            statement_markdown: statement_markdown.into(),
            limits,
            checker: CheckerKind::TokenCompare,
            tags: Vec::new(),
        };
        problem.validate()?;
        Ok(problem)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if self.id.trim().is_empty() {
            return Err(ModelError::InvalidProblem("empty id".into()));
        }
        if self.statement_markdown.trim().is_empty() {
            return Err(ModelError::InvalidProblem(format!("problem `{}` has an empty statement", self.id)));
        }
        Ok(())
    }
}

/// One test: an input file and, once produced, its expected output.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TestCase {
    pub index: usize,
    pub input_name: String,
    #[serde(with = "lossless_bytes")]
    pub input: Vec<u8>,
    #[serde(with = "lossless_bytes_opt", default)]
    pub expected: Option<Vec<u8>>,
}

impl TestCase {
    pub fn new(index: usize, input: Vec<u8>, expected: Option<Vec<u8>>) -> Self {
        TestCase { index, input_name: case_name(index, 0), input, expected }
    }

    /// File stem shared by the input and the expected output (`test07`).
    pub fn stem(&self) -> &str {
        self.input_name.strip_suffix(".in").unwrap_or(&self.input_name)
    }

    pub fn expected_name(&self) -> String {
        format!("{}.{EXPECTED_SUFFIX}", self.stem())
    }
}

/// Suffix for expected output files, mirroring the input stem.
pub const EXPECTED_SUFFIX: &str = "ok";

/// Name of the `index`-th test in a suite of `total` tests: `test07.in`, or
/// wider padding once the suite grows past 99 cases.
pub fn case_name(index: usize, total: usize) -> String {
    let width = name_width(total);
    format!("test{index:0width$}.in")
}

fn name_width(total: usize) -> usize {
    if total <= 99 {
        2
    } else {
        total.to_string().len()
    }
}

/// Parses `testNN.in` into its index. Requires at least two digits.
pub fn parse_case_name(name: &str) -> Option<usize> {
    let digits = name.strip_prefix("test")?.strip_suffix(".in")?;
    if digits.len() < 2 || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    digits.parse().ok()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TestSuite {
    pub label: String,
    pub cases: Vec<TestCase>,
}

impl TestSuite {
    pub fn new(label: impl Into<String>, cases: Vec<TestCase>) -> Result<Self, ModelError> {
        let suite = TestSuite { label: label.into(), cases };
        suite.validate()?;
        Ok(suite)
    }

    /// Builds a suite from raw inputs, numbered from 1.
    pub fn from_inputs(label: impl Into<String>, inputs: Vec<Vec<u8>>) -> Self {
        let total = inputs.len();
        let cases = inputs
            .into_iter()
            .enumerate()
            .map(|(i, input)| TestCase { index: i + 1, input_name: case_name(i + 1, total), input, expected: None })
            .collect();
        TestSuite { label: label.into(), cases }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |reason: String| ModelError::InvalidSuite { label: self.label.clone(), reason };
        let mut names = std::collections::HashSet::new();
        let mut last = 0usize;
        for case in &self.cases {
            if case.index <= last {
                return Err(bad(format!("case index {} is not increasing", case.index)));
            }
            last = case.index;
            if parse_case_name(&case.input_name) != Some(case.index) {
                return Err(bad(format!("case {} has name `{}`, expected the testNN.in pattern", case.index, case.input_name)));
            }
            if !names.insert(case.input_name.as_str()) {
                return Err(bad(format!("duplicate name `{}`", case.input_name)));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.cases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cases.is_empty()
    }

    pub fn is_complete(&self) -> bool {
        self.cases.iter().all(|c| c.expected.is_some())
    }

    pub fn case(&self, index: usize) -> Option<&TestCase> {
        self.cases.iter().find(|c| c.index == index)
    }
}

/// Renumbers cases contiguously from 1 in their current order and renames
/// them to the `testNN.in` pattern.
pub fn normalize_names(suite: &TestSuite) -> TestSuite {
    let total = suite.cases.len();
    let cases = suite
        .cases
        .iter()
        .enumerate()
        .map(|(i, c)| TestCase { index: i + 1, input_name: case_name(i + 1, total), input: c.input.clone(), expected: c.expected.clone() })
        .collect();
    TestSuite { label: suite.label.clone(), cases }
}

/// Concatenates `a` and `b`, renumbering the result. Labels join with `+`.
pub fn merge_suites(a: &TestSuite, b: &TestSuite) -> TestSuite {
    let joined = TestSuite { label: format!("{}+{}", a.label, b.label), cases: a.cases.iter().chain(&b.cases).cloned().collect() };
    normalize_names(&joined)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Origin {
    Contest,
    Upsolve,
    Fixture,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Submission {
    pub id: String,
    pub source_text: String,
    pub toolchain_id: String,
    pub origin: Origin,
}

impl Submission {
    pub fn new(
        id: impl Into<String>,
        source_text: impl Into<String>,
        toolchain_id: impl Into<String>,
        origin: Origin,
    ) -> Result<Self, ModelError> {
        let sub = Submission { id: id.into(), source_text: source_text.into(), toolchain_id: toolchain_id.into(), origin };
        if sub.source_text.trim().is_empty() {
            return Err(ModelError::InvalidSubmission { id: sub.id, reason: "empty source".into() });
        }
        Ok(sub)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Verdict {
    AC,
    WA,
    TLE,
    MLE,
    RE,
}

impl Verdict {
    pub const ALL: [Verdict; 5] = [Verdict::AC, Verdict::WA, Verdict::TLE, Verdict::MLE, Verdict::RE];

    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::AC => "AC",
            Verdict::WA => "WA",
            Verdict::TLE => "TLE",
            Verdict::MLE => "MLE",
            Verdict::RE => "RE",
        }
    }

    /// Severity rank used when keeping the worse of two outcomes.
    pub fn severity(&self) -> u8 {
        match self {
            Verdict::AC => 0,
            Verdict::WA => 1,
            Verdict::RE => 2,
            Verdict::MLE => 3,
            Verdict::TLE => 4,
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Verdict {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Verdict::ALL.into_iter().find(|v| v.as_str().eq_ignore_ascii_case(s)).ok_or_else(|| ModelError::UnknownVerdict(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestVerdict {
    pub index: usize,
    pub verdict: Verdict,
    pub cpu_ms: u64,
    pub peak_mem_mib: f64,
}

/// Per-test verdicts for one submission against one suite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteResult {
    pub submission_id: String,
    pub suite_label: String,
    pub per_test: Vec<TestVerdict>,
    pub compile_failed: bool,
}

impl SuiteResult {
    pub fn compile_failure(submission_id: impl Into<String>, suite_label: impl Into<String>) -> Self {
        SuiteResult { submission_id: submission_id.into(), suite_label: suite_label.into(), per_test: Vec::new(), compile_failed: true }
    }

    /// Shorthand for results with no resource figures, mostly for planted
    /// pass/fail patterns.
    pub fn from_verdicts(submission_id: impl Into<String>, suite_label: impl Into<String>, verdicts: &[Verdict]) -> Self {
        SuiteResult {
            submission_id: submission_id.into(),
            suite_label: suite_label.into(),
            per_test: verdicts
                .iter()
                .enumerate()
                .map(|(i, &verdict)| TestVerdict { index: i + 1, verdict, cpu_ms: 0, peak_mem_mib: 0.0 })
                .collect(),
            compile_failed: false,
        }
    }

    pub fn verdicts(&self) -> Vec<Verdict> {
        self.per_test.iter().map(|t| t.verdict).collect()
    }

    /// The lowest-index test that was not accepted.
    pub fn first_failure(&self) -> Option<&TestVerdict> {
        self.per_test.iter().filter(|t| t.verdict != Verdict::AC).min_by_key(|t| t.index)
    }
}

/// A "100 point" result: compiled, and every test accepted.
pub fn full_pass(result: &SuiteResult) -> bool {
    !result.compile_failed && result.per_test.iter().all(|t| t.verdict == Verdict::AC)
}

/// Serializes byte vectors as UTF-8 strings when possible and as hex
/// otherwise, so JSON stays readable for text inputs without losing bytes.
mod lossless_bytes {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    #[serde(untagged)]
    pub(super) enum Repr {
        Text(String),
        Hex { hex: String },
    }

    pub(super) fn to_repr(bytes: &[u8]) -> Repr {
        match std::str::from_utf8(bytes) {
            Ok(s) => Repr::Text(s.to_string()),
            Err(_) => Repr::Hex { hex: hex::encode(bytes) },
        }
    }

    pub(super) fn from_repr<E: serde::de::Error>(repr: Repr) -> Result<Vec<u8>, E> {
        match repr {
            Repr::Text(s) => Ok(s.into_bytes()),
            Repr::Hex { hex } => hex::decode(hex).map_err(E::custom),
        }
    }

    pub fn serialize<S: Serializer>(bytes: &[u8], s: S) -> Result<S::Ok, S::Error> {
        to_repr(bytes).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<u8>, D::Error> {
        from_repr(Repr::deserialize(d)?)
    }
}

mod lossless_bytes_opt {
    use super::lossless_bytes::{from_repr, to_repr, Repr};
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(bytes: &Option<Vec<u8>>, s: S) -> Result<S::Ok, S::Error> {
        bytes.as_deref().map(to_repr).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Vec<u8>>, D::Error> {
        Option::<Repr>::deserialize(d)?.map(from_repr).transpose()
    }
}
