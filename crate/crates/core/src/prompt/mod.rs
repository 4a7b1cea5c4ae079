//! Prompt templates for generator-bundle requests, and parsing of the
//! model's reply back into a [`GeneratorBundle`].
//!
//! The two built-in templates live in `prompts/v1.txt` and `prompts/v2.txt`
//! as plain text with `{slot}` markers. Slots are substituted in a single
//! pass over the template, so braces inside substituted text (C++ sources,
//! statements with LaTeX) are never re-interpreted.

mod bundle;
mod lint;

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use bundle::{format_bundle, parse_bundle, BundleError, BundleFiles, GeneratorBundle, Part};
pub use lint::{lint_bundle, ConstraintSidecar, Finding, FindingCategory};

/// Default number of tests requested from the model.
pub const DEFAULT_CASE_COUNT: usize = 25;

const V1_BODY: &str = include_str!("../../prompts/v1.txt");
const V2_BODY: &str = include_str!("../../prompts/v2.txt");
/// Exemplar generator attached to v2 prompts. Repository content, not part
/// of the original prompt.
pub const MODEL_GENERATOR: &str = include_str!("../../prompts/model_generator.cpp");
/// Exemplar batch file attached to v2 prompts.
pub const MODEL_BATCH: &str = include_str!("../../prompts/model_batch.bat");

const V1_OPENING: &str = "You are given a competitive programming problem in markdown";
const V2_MARKER: &str = "Use argvs for parameters, cout for printing";

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PromptError {
    #[error("missing prompt slot `{0}`")]
    MissingSlot(String),
    #[error("template references unknown slot `{0}`")]
    UnknownSlot(String),
    #[error("invalid template: {0}")]
    InvalidTemplate(String),
    #[error("requested case count must be at least 1")]
    InvalidCaseCount,
    #[error("cannot read template: {0}")]
    Io(String),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PromptVersion {
    V1,
    #[default]
    V2,
}

impl fmt::Display for PromptVersion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PromptVersion::V1 => "v1",
            PromptVersion::V2 => "v2",
        })
    }
}

impl FromStr for PromptVersion {
    type Err = PromptError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "v1" | "1" => Ok(PromptVersion::V1),
            "v2" | "2" => Ok(PromptVersion::V2),
            other => Err(PromptError::InvalidTemplate(format!("unknown prompt version `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptTemplate {
    version: PromptVersion,
    body: String,
}

impl PromptTemplate {
    pub fn builtin(version: PromptVersion) -> Self {
        let body = match version {
            PromptVersion::V1 => V1_BODY,
            PromptVersion::V2 => V2_BODY,
        };
        PromptTemplate { version, body: body.to_string() }
    }

    pub fn new(version: PromptVersion, body: impl Into<String>) -> Result<Self, PromptError> {
        let template = PromptTemplate { version, body: body.into() };
        template.check()?;
        Ok(template)
    }

    pub fn from_file(version: PromptVersion, path: &Path) -> Result<Self, PromptError> {
        let body = std::fs::read_to_string(path).map_err(|e| PromptError::Io(format!("{}: {e}", path.display())))?;
        Self::new(version, body)
    }

    pub fn version(&self) -> PromptVersion {
        self.version
    }

    pub fn body(&self) -> &str {
        &self.body
    }

    fn check(&self) -> Result<(), PromptError> {
        if !self.body.starts_with(V1_OPENING) {
            return Err(PromptError::InvalidTemplate(format!("{} template must open with \"{V1_OPENING}\"", self.version)));
        }
        if self.version == PromptVersion::V2 && !self.body.contains(V2_MARKER) {
            return Err(PromptError::InvalidTemplate(format!("v2 template must contain \"{V2_MARKER}\"")));
        }
        for piece in segments(&self.body) {
            if let Segment::Slot(name) = piece {
                if !KNOWN_SLOTS.contains(&name) {
                    return Err(PromptError::UnknownSlot(name.to_string()));
                }
            }
        }
        Ok(())
    }

    /// Slot names the template references, in order of first use.
    pub fn slots(&self) -> Vec<&str> {
        let mut seen = Vec::new();
        for piece in segments(&self.body) {
            if let Segment::Slot(name) = piece {
                if !seen.contains(&name) {
                    seen.push(name);
                }
            }
        }
        seen
    }
}

const KNOWN_SLOTS: [&str; 4] = ["statement", "case_count", "model_generator", "model_batch"];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptContext {
    pub statement: String,
    pub model_generator: Option<String>,
    pub model_batch: Option<String>,
    pub requested_case_count: usize,
}

impl PromptContext {
    pub fn new(statement: impl Into<String>) -> Self {
        PromptContext { statement: statement.into(), model_generator: None, model_batch: None, requested_case_count: DEFAULT_CASE_COUNT }
    }

    /// Attaches the repository's exemplar generator and batch file.
    pub fn with_exemplars(mut self) -> Self {
        self.model_generator = Some(MODEL_GENERATOR.to_string());
        self.model_batch = Some(MODEL_BATCH.to_string());
        self
    }

    fn values(&self) -> BTreeMap<&'static str, String> {
        let mut values = BTreeMap::new();
        values.insert("statement", self.statement.clone());
        values.insert("case_count", self.requested_case_count.to_string());
        if let Some(g) = &self.model_generator {
            values.insert("model_generator", g.trim_end_matches('\n').to_string());
        }
        if let Some(b) = &self.model_batch {
            values.insert("model_batch", b.trim_end_matches('\n').to_string());
        }
        values
    }
}

enum Segment<'a> {
    Text(&'a str),
    Slot(&'a str),
}

fn segments(body: &str) -> Vec<Segment<'_>> {
    let mut out = Vec::new();
    let mut rest = body;
    while let Some(open) = rest.find('{') {
        let after = &rest[open + 1..];
        let close = after.find('}');
        let name = close.map(|c| &after[..c]);
        match name {
            Some(n) if !n.is_empty() && n.bytes().all(|b| b.is_ascii_lowercase() || b == b'_') => {
                out.push(Segment::Text(&rest[..open]));
                out.push(Segment::Slot(n));
                rest = &after[n.len() + 1..];
            }
            _ => {
                out.push(Segment::Text(&rest[..=open]));
                rest = after;
            }
        }
    }
    out.push(Segment::Text(rest));
    out
}

/// Substitutes `ctx` into `template`.
pub fn render_prompt(template: &PromptTemplate, ctx: &PromptContext) -> Result<String, PromptError> {
    if ctx.requested_case_count == 0 {
        return Err(PromptError::InvalidCaseCount);
    }
    let values = ctx.values();
    let mut out = String::with_capacity(template.body.len() + ctx.statement.len());
    for piece in segments(&template.body) {
        match piece {
            Segment::Text(t) => out.push_str(t),
            Segment::Slot(name) => {
                if !KNOWN_SLOTS.contains(&name) {
                    return Err(PromptError::UnknownSlot(name.to_string()));
                }
                let value = values.get(name).ok_or_else(|| PromptError::MissingSlot(name.to_string()))?;
                out.push_str(value);
            }
        }
    }
    Ok(out)
}
