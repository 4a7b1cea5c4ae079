//! Differential metrics over two judgings of the same submissions: one
//! against the original suite, one against the generated suite.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write as _};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{full_pass, SuiteResult, Verdict};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DiffError {
    #[error("submission sets differ: only judged on original {only_original:?}, only judged on ai {only_ai:?}")]
    SubmissionSetMismatch { only_original: Vec<String>, only_ai: Vec<String> },
    #[error("submission `{0}` appears more than once")]
    DuplicateSubmission(String),
    #[error("inconsistent row `{problem}`: {reason}")]
    InconsistentRow { problem: String, reason: String },
    #[error("cannot parse rows: {0}")]
    Parse(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiffRow {
    pub problem_id: String,
    pub before: u64,
    pub after: u64,
    pub both: u64,
    pub only_original: u64,
    pub only_ai: u64,
}

impl DiffRow {
    /// Builds a row, checking `before = both + only_original` and
    /// `after = both + only_ai`.
    pub fn new(
        problem_id: impl Into<String>,
        before: u64,
        after: u64,
        both: u64,
        only_original: u64,
        only_ai: u64,
    ) -> Result<Self, DiffError> {
        let row = DiffRow { problem_id: problem_id.into(), before, after, both, only_original, only_ai };
        row.check()?;
        Ok(row)
    }

    pub fn check(&self) -> Result<(), DiffError> {
        let bad = |reason: String| DiffError::InconsistentRow { problem: self.problem_id.clone(), reason };
        if self.before != self.both + self.only_original {
            return Err(bad(format!("before {} != both {} + only_original {}", self.before, self.both, self.only_original)));
        }
        if self.after != self.both + self.only_ai {
            return Err(bad(format!("after {} != both {} + only_ai {}", self.after, self.both, self.only_ai)));
        }
        Ok(())
    }

    pub fn bucket(&self) -> Option<Bucket> {
        bucket_of(self.before, self.only_original)
    }
}

pub const CSV_HEADER: &str = "problem,before,after,both,only_original,only_ai";

/// Parses rows in the CSV schema, checking both identities on every row.
pub fn rows_from_csv(text: &str) -> Result<Vec<DiffRow>, DiffError> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    match lines.next() {
        Some(h) if h.trim() == CSV_HEADER => {}
        other => return Err(DiffError::Parse(format!("expected header `{CSV_HEADER}`, found {other:?}"))),
    }
    lines
        .map(|line| {
            let f: Vec<&str> = line.split(',').map(str::trim).collect();
            if f.len() != 6 {
                return Err(DiffError::Parse(format!("expected 6 fields: `{line}`")));
            }
            let n = |s: &str| s.parse::<u64>().map_err(|e| DiffError::Parse(format!("`{s}` in `{line}`: {e}")));
            DiffRow::new(f[0], n(f[1])?, n(f[2])?, n(f[3])?, n(f[4])?, n(f[5])?)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Bucket {
    B0,
    B1,
    B2,
    B3,
    B4,
}

impl Bucket {
    pub const ALL: [Bucket; 5] = [Bucket::B0, Bucket::B1, Bucket::B2, Bucket::B3, Bucket::B4];

    pub fn label(&self) -> &'static str {
        match self {
            Bucket::B0 => "0%",
            Bucket::B1 => "0.1-10%",
            Bucket::B2 => "10.1-25%",
            Bucket::B3 => "25.1-50%",
            Bucket::B4 => "50+%",
        }
    }
}

impl fmt::Display for Bucket {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Buckets the failed fraction `only_original / before`, closed on the
/// right: exactly 10% is B1, anything above is B2. `None` when `before` is 0.
/// Comparisons are exact integer arithmetic.
pub fn bucket_of(before: u64, only_original: u64) -> Option<Bucket> {
    if before == 0 {
        return None;
    }
    let (b, o) = (before as u128, only_original as u128);
    Some(if o == 0 {
        Bucket::B0
    } else if 10 * o <= b {
        Bucket::B1
    } else if 4 * o <= b {
        Bucket::B2
    } else if 2 * o <= b {
        Bucket::B3
    } else {
        Bucket::B4
    })
}

/// The same rule applied to a fraction in `[0, 1]`.
pub fn bucket_of_fraction(f: f64) -> Bucket {
    if f <= 0.0 {
        Bucket::B0
    } else if f <= 0.10 {
        Bucket::B1
    } else if f <= 0.25 {
        Bucket::B2
    } else if f <= 0.50 {
        Bucket::B3
    } else {
        Bucket::B4
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BucketDistribution {
    #[serde(with = "bucket_counts")]
    pub counts: BTreeMap<Bucket, u64>,
    /// Rows with no 100p solutions before, left out of `counts`.
    pub undefined: u64,
}

impl BucketDistribution {
    pub fn get(&self, b: Bucket) -> u64 {
        self.counts.get(&b).copied().unwrap_or(0)
    }

    pub fn as_array(&self) -> [u64; 5] {
        Bucket::ALL.map(|b| self.get(b))
    }
}

mod bucket_counts {
    use super::Bucket;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};
    use std::collections::BTreeMap;

    pub fn serialize<S: Serializer>(m: &BTreeMap<Bucket, u64>, s: S) -> Result<S::Ok, S::Error> {
        let labelled: Vec<(&str, u64)> = Bucket::ALL.iter().map(|b| (b.label(), m.get(b).copied().unwrap_or(0))).collect();
        let map: serde_json::Map<String, serde_json::Value> = labelled.into_iter().map(|(k, v)| (k.to_string(), v.into())).collect();
        map.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BTreeMap<Bucket, u64>, D::Error> {
        let raw = BTreeMap::<String, u64>::deserialize(d)?;
        raw.into_iter()
            .map(|(k, v)| {
                Bucket::ALL
                    .into_iter()
                    .find(|b| b.label() == k)
                    .map(|b| (b, v))
                    .ok_or_else(|| serde::de::Error::custom(format!("unknown bucket `{k}`")))
            })
            .collect()
    }
}

pub fn bucket_distribution(rows: &[DiffRow]) -> BucketDistribution {
    let mut d = BucketDistribution { counts: Bucket::ALL.iter().map(|b| (*b, 0)).collect(), undefined: 0 };
    for row in rows {
        match row.bucket() {
            Some(b) => *d.counts.entry(b).or_default() += 1,
            None => d.undefined += 1,
        }
    }
    d
}

fn index_by_submission(results: &[SuiteResult]) -> Result<BTreeMap<&str, &SuiteResult>, DiffError> {
    let mut map = BTreeMap::new();
    for r in results {
        if map.insert(r.submission_id.as_str(), r).is_some() {
            return Err(DiffError::DuplicateSubmission(r.submission_id.clone()));
        }
    }
    Ok(map)
}

fn align<'a>(original: &'a [SuiteResult], ai: &'a [SuiteResult]) -> Result<Vec<(&'a SuiteResult, &'a SuiteResult)>, DiffError> {
    let o = index_by_submission(original)?;
    let a = index_by_submission(ai)?;
    let ok: BTreeSet<&str> = o.keys().copied().collect();
    let ak: BTreeSet<&str> = a.keys().copied().collect();
    if ok != ak {
        return Err(DiffError::SubmissionSetMismatch {
            only_original: ok.difference(&ak).map(|s| s.to_string()).collect(),
            only_ai: ak.difference(&ok).map(|s| s.to_string()).collect(),
        });
    }
    Ok(o.into_iter().map(|(id, r)| (r, a[id])).collect())
}

pub fn diff_problem(problem_id: &str, results_original: &[SuiteResult], results_ai: &[SuiteResult]) -> Result<DiffRow, DiffError> {
    let pairs = align(results_original, results_ai)?;
    let (mut before, mut after, mut both) = (0, 0, 0);
    for (o, a) in pairs {
        let (po, pa) = (full_pass(o), full_pass(a));
        before += po as u64;
        after += pa as u64;
        both += (po && pa) as u64;
    }
    DiffRow::new(problem_id, before, after, both, before - both, after - both)
}

/// Counts of the attributed verdict for each newly failed submission.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerdictHistogram {
    #[serde(rename = "WA")]
    pub wa: u64,
    #[serde(rename = "TLE")]
    pub tle: u64,
    #[serde(rename = "MLE")]
    pub mle: u64,
    #[serde(rename = "RE")]
    pub re: u64,
    /// Newly failed submissions with no failing test to attribute, i.e.
    /// compile failures on the generated suite.
    #[serde(default)]
    pub unattributed: u64,
}

impl VerdictHistogram {
    /// A histogram counting one solution with verdict `v`.
    pub fn from_verdict(v: Verdict) -> Self {
        let mut h = VerdictHistogram::default();
        h.bump(v);
        h
    }

    pub fn get(&self, v: Verdict) -> u64 {
        match v {
            Verdict::AC => 0,
            Verdict::WA => self.wa,
            Verdict::TLE => self.tle,
            Verdict::MLE => self.mle,
            Verdict::RE => self.re,
        }
    }

    fn bump(&mut self, v: Verdict) {
        match v {
            Verdict::AC => {}
            Verdict::WA => self.wa += 1,
            Verdict::TLE => self.tle += 1,
            Verdict::MLE => self.mle += 1,
            Verdict::RE => self.re += 1,
        }
    }

    pub fn total(&self) -> u64 {
        self.wa + self.tle + self.mle + self.re + self.unattributed
    }

    pub fn merge(&mut self, other: &VerdictHistogram) {
        self.wa += other.wa;
        self.tle += other.tle;
        self.mle += other.mle;
        self.re += other.re;
        self.unattributed += other.unattributed;
    }
}

impl FromStr for VerdictHistogram {
    type Err = DiffError;

    /// Parses `WA=3,TLE=2` style summaries.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut h = VerdictHistogram::default();
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (k, v) = part.split_once('=').ok_or_else(|| DiffError::Parse(part.to_string()))?;
            let n: u64 = v.trim().parse().map_err(|_| DiffError::Parse(part.to_string()))?;
            match k.trim() {
                "WA" => h.wa = n,
                "TLE" => h.tle = n,
                "MLE" => h.mle = n,
                "RE" => h.re = n,
                "unattributed" => h.unattributed = n,
                other => return Err(DiffError::Parse(format!("unknown verdict `{other}`"))),
            }
        }
        Ok(h)
    }
}

/// For each submission that fully passed the original suite but not the
/// generated one, tallies the verdict of its lowest-index failing test.
pub fn verdict_histogram(results_original: &[SuiteResult], results_ai: &[SuiteResult]) -> Result<VerdictHistogram, DiffError> {
    let mut h = VerdictHistogram::default();
    for (o, a) in align(results_original, results_ai)? {
        if !full_pass(o) || full_pass(a) {
            continue;
        }
        match a.first_failure() {
            Some(t) => h.bump(t.verdict),
            None => h.unattributed += 1,
        }
    }
    Ok(h)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportFormat {
    Markdown,
    Csv,
    Json,
}

impl FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "markdown" | "markdown_table" | "md" => Ok(ReportFormat::Markdown),
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            other => Err(format!("unknown report format `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Report {
    pub rows: Vec<DiffRow>,
    pub distributions: BTreeMap<String, BucketDistribution>,
    pub histograms: BTreeMap<String, VerdictHistogram>,
}

pub const MARKDOWN_HEADER: &str = "| Problem | 100p Before | 100p After | Both Sets | Only Original | Only AI |";

/// Deterministic rendering. Rows are sorted by problem id (stable, so
/// repeated ids keep their input order).
pub fn render_report(report: &Report, format: ReportFormat) -> String {
    let mut rows = report.rows.clone();
    rows.sort_by(|a, b| a.problem_id.cmp(&b.problem_id));
    let mut out = String::new();
    match format {
        ReportFormat::Markdown => {
            out.push_str(MARKDOWN_HEADER);
            out.push_str("\n|---|---:|---:|---:|---:|---:|\n");
            for r in &rows {
                let _ =
                    writeln!(out, "| {} | {} | {} | {} | {} | {} |", r.problem_id, r.before, r.after, r.both, r.only_original, r.only_ai);
            }
            for (name, d) in &report.distributions {
                let _ = write!(out, "\n### Failure-rate buckets: {name}\n\n| Bucket | Problems |\n|---|---:|\n");
                for b in Bucket::ALL {
                    let _ = writeln!(out, "| {} | {} |", b.label(), d.get(b));
                }
                let _ = writeln!(out, "| undefined | {} |", d.undefined);
            }
            for (name, h) in &report.histograms {
                let _ = write!(out, "\n### Verdicts of newly failed solutions: {name}\n\n| Verdict | Solutions |\n|---|---:|\n");
                for v in [Verdict::WA, Verdict::TLE, Verdict::MLE, Verdict::RE] {
                    let _ = writeln!(out, "| {v} | {} |", h.get(v));
                }
                if h.unattributed > 0 {
                    let _ = writeln!(out, "| unattributed | {} |", h.unattributed);
                }
            }
        }
        ReportFormat::Csv => {
            out.push_str(CSV_HEADER);
            out.push('\n');
            for r in &rows {
                let _ = writeln!(out, "{},{},{},{},{},{}", r.problem_id, r.before, r.after, r.both, r.only_original, r.only_ai);
            }
            if !report.distributions.is_empty() {
                out.push_str("\ndistribution,bucket,count\n");
                for (name, d) in &report.distributions {
                    for b in Bucket::ALL {
                        let _ = writeln!(out, "{name},{},{}", b.label(), d.get(b));
                    }
                    let _ = writeln!(out, "{name},undefined,{}", d.undefined);
                }
            }
            if !report.histograms.is_empty() {
                out.push_str("\nhistogram,verdict,count\n");
                for (name, h) in &report.histograms {
                    for v in [Verdict::WA, Verdict::TLE, Verdict::MLE, Verdict::RE] {
                        let _ = writeln!(out, "{name},{v},{}", h.get(v));
                    }
                    let _ = writeln!(out, "{name},unattributed,{}", h.unattributed);
                }
            }
        }
        ReportFormat::Json => {
            let sorted = Report { rows, distributions: report.distributions.clone(), histograms: report.histograms.clone() };
            out = serde_json::to_string_pretty(&sorted).expect("report serializes");
            out.push('\n');
        }
    }
    out
}
