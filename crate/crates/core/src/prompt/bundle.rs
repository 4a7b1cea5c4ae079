use std::fmt;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// The artifacts a model is asked for: generator, validator, one argv row
/// per test, and an informational batch script.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeneratorBundle {
    pub generator_source: String,
    pub validator_source: String,
    pub param_rows: Vec<String>,
    pub batch_script: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Part {
    Generator,
    Validator,
    Params,
    Batch,
}

impl fmt::Display for Part {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Part::Generator => "generator",
            Part::Validator => "validator",
            Part::Params => "params",
            Part::Batch => "batch",
        })
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum BundleError {
    #[error("bundle incomplete, missing: {}", .0.iter().map(|p| p.to_string()).collect::<Vec<_>>().join(", "))]
    BundleIncomplete(Vec<Part>),
    #[error("found {0} parameter rows, expected {1}")]
    ParamCountMismatch(usize, usize),
    #[error("ambiguous response: {0} code blocks look like the {1}")]
    Ambiguous(usize, Part),
    #[error("invalid bundle: {0}")]
    Invalid(String),
    #[error("bundle i/o error: {0}")]
    Io(String),
}

/// File names used when a bundle is stored as a directory.
pub struct BundleFiles;

impl BundleFiles {
    pub const GENERATOR: &'static str = "gen.cpp";
    pub const VALIDATOR: &'static str = "val.cpp";
    pub const PARAMS: &'static str = "params.txt";
    pub const BATCH: &'static str = "gen_all.bat";
}

impl GeneratorBundle {
    pub fn new(
        generator_source: impl Into<String>,
        validator_source: impl Into<String>,
        param_rows: Vec<String>,
        batch_script: Option<String>,
    ) -> Result<Self, BundleError> {
        let bundle = GeneratorBundle {
            generator_source: normalize_source(&generator_source.into()),
            validator_source: normalize_source(&validator_source.into()),
            param_rows,
            batch_script: batch_script.map(|b| normalize_source(&b)),
        };
        bundle.validate()?;
        Ok(bundle)
    }

    pub fn validate(&self) -> Result<(), BundleError> {
        let mut missing = Vec::new();
        if self.generator_source.trim().is_empty() {
            missing.push(Part::Generator);
        }
        if self.validator_source.trim().is_empty() {
            missing.push(Part::Validator);
        }
        if self.param_rows.is_empty() {
            missing.push(Part::Params);
        }
        if !missing.is_empty() {
            return Err(BundleError::BundleIncomplete(missing));
        }
        if let Some(i) = self.param_rows.iter().position(|r| r.trim().is_empty()) {
            return Err(BundleError::Invalid(format!("parameter row {} is empty", i + 1)));
        }
        Ok(())
    }

    /// Loads `gen.cpp`, `val.cpp`, `params.txt` and the optional `gen_all.bat`.
    pub fn read_dir(dir: &Path) -> Result<Self, BundleError> {
        let read =
            |name: &str| fs::read_to_string(dir.join(name)).map_err(|e| BundleError::Io(format!("{}: {e}", dir.join(name).display())));
        let params = read(BundleFiles::PARAMS)?;
        let batch = dir.join(BundleFiles::BATCH);
        GeneratorBundle::new(
            read(BundleFiles::GENERATOR)?,
            read(BundleFiles::VALIDATOR)?,
            param_lines(&params),
            batch.exists().then(|| read(BundleFiles::BATCH)).transpose()?,
        )
    }

    pub fn write_dir(&self, dir: &Path) -> Result<(), BundleError> {
        let io = |e: std::io::Error| BundleError::Io(format!("{}: {e}", dir.display()));
        fs::create_dir_all(dir).map_err(io)?;
        fs::write(dir.join(BundleFiles::GENERATOR), &self.generator_source).map_err(io)?;
        fs::write(dir.join(BundleFiles::VALIDATOR), &self.validator_source).map_err(io)?;
        let mut params = self.param_rows.join("\n");
        params.push('\n');
        fs::write(dir.join(BundleFiles::PARAMS), params).map_err(io)?;
        if let Some(batch) = &self.batch_script {
            fs::write(dir.join(BundleFiles::BATCH), batch).map_err(io)?;
        }
        Ok(())
    }
}

fn normalize_source(s: &str) -> String {
    let mut out = s.replace("\r\n", "\n");
    if !out.is_empty() && !out.ends_with('\n') {
        out.push('\n');
    }
    out
}

fn param_lines(text: &str) -> Vec<String> {
    text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#') && !l.starts_with("//")).map(normalize_param_row).collect()
}

/// Strips a leading generator invocation and a trailing `> testNN.in`
/// redirection, leaving only the argument vector.
fn normalize_param_row(line: &str) -> String {
    let without_redirect = match line.find('>') {
        Some(pos) => line[..pos].trim_end(),
        None => line,
    };
    let mut tokens: Vec<&str> = without_redirect.split_whitespace().collect();
    if let Some(first) = tokens.first() {
        let name = first.trim_start_matches("./").trim_end_matches(".exe");
        if matches!(name, "gen" | "generator") {
            tokens.remove(0);
        }
    }
    tokens.join(" ")
}

struct CodeBlock {
    info: String,
    content: String,
    label: String,
}

fn extract_blocks(response: &str) -> Vec<CodeBlock> {
    let mut blocks = Vec::new();
    let mut label = String::new();
    let mut open: Option<(String, String, String, Vec<&str>)> = None;
    for line in response.lines() {
        let trimmed = line.trim_start();
        let indent = line.len() - trimmed.len();
        match open.as_mut() {
            Some((fence, _, _, body)) => {
                if indent <= 3
                    && trimmed.starts_with(fence.as_str())
                    && trimmed.trim_start_matches(fence.chars().next().unwrap()).trim().is_empty()
                {
                    let (_, info, label, body) = open.take().unwrap();
                    let mut content = body.join("\n");
                    if !content.is_empty() {
                        content.push('\n');
                    }
                    blocks.push(CodeBlock { info, content, label });
                } else {
                    body.push(line);
                }
            }
            None => {
                let fence_char = trimmed.chars().next();
                if indent <= 3 && matches!(fence_char, Some('`') | Some('~')) {
                    let c = fence_char.unwrap();
                    let run = trimmed.chars().take_while(|&x| x == c).count();
                    if run >= 3 {
                        let fence: String = std::iter::repeat_n(c, run).collect();
                        let info = trimmed[run..].trim().to_lowercase();
                        open = Some((fence, info, std::mem::take(&mut label), Vec::new()));
                        continue;
                    }
                }
                if !trimmed.trim().is_empty() {
                    label = trimmed.trim().to_string();
                }
            }
        }
    }
    blocks
}

fn part_by_label(label: &str) -> Option<Part> {
    let lower = label.to_lowercase();
    let keywords: [(Part, &[&str]); 4] = [
        (Part::Generator, &["generator", "gen.cpp"]),
        (Part::Validator, &["validator", "val.cpp"]),
        (Part::Params, &["parameter", "params"]),
        (Part::Batch, &["batch", ".bat"]),
    ];
    keywords
        .iter()
        .filter_map(|(part, words)| words.iter().filter_map(|w| lower.find(w)).min().map(|pos| (pos, *part)))
        .min()
        .map(|(_, part)| part)
}

fn part_by_content(block: &CodeBlock) -> Option<Part> {
    let c = &block.content;
    if matches!(block.info.as_str(), "bat" | "batch" | "cmd" | "dos") || c.to_lowercase().contains("@echo") {
        return Some(Part::Batch);
    }
    if c.contains("registerValidation") || c.contains("inf.read") {
        return Some(Part::Validator);
    }
    if c.contains("registerGen") || (c.contains("#include") && c.contains("argv")) {
        return Some(Part::Generator);
    }
    if c.contains("#include") {
        return None;
    }
    let lines: Vec<&str> = c.lines().filter(|l| !l.trim().is_empty()).collect();
    if lines.is_empty() {
        return None;
    }
    let redirects = lines.iter().filter(|l| l.contains('>')).count();
    if redirects == lines.len() && lines.iter().any(|l| l.contains(".exe") || l.contains("gen")) {
        return Some(Part::Batch);
    }
    let looks_like_args =
        lines.iter().all(|l| !l.contains(';') && !l.contains('{') && !l.contains('}') && l.split_whitespace().count() <= 64);
    looks_like_args.then_some(Part::Params)
}

/// Pulls the four artifacts out of a Markdown reply.
///
/// Fenced blocks are classified by the line immediately above them first
/// (a heading such as `### Validator`), then by content idioms. Two blocks
/// claiming the same role with equal confidence is an error.
pub fn parse_bundle(response: &str, expected_count: usize) -> Result<GeneratorBundle, BundleError> {
    let blocks = extract_blocks(response);
    // (part, labelled?, block index)
    let mut assigned: Vec<(Part, bool, usize)> = Vec::new();
    for (i, block) in blocks.iter().enumerate() {
        let by_label = part_by_label(&block.label);
        let part = by_label.or_else(|| part_by_content(block));
        if let Some(part) = part {
            assigned.push((part, by_label.is_some(), i));
        }
    }

    let pick = |part: Part| -> Result<Option<&CodeBlock>, BundleError> {
        let candidates: Vec<_> = assigned.iter().filter(|(p, _, _)| *p == part).collect();
        let labelled: Vec<_> = candidates.iter().filter(|(_, l, _)| *l).collect();
        let chosen = match (labelled.len(), candidates.len()) {
            (1, _) => Some(labelled[0].2),
            (0, 1) => Some(candidates[0].2),
            (0, 0) => None,
            (0, n) => return Err(BundleError::Ambiguous(n, part)),
            (n, _) => return Err(BundleError::Ambiguous(n, part)),
        };
        Ok(chosen.map(|i| &blocks[i]))
    };

    let generator = pick(Part::Generator)?;
    let validator = pick(Part::Validator)?;
    let params = pick(Part::Params)?;
    let batch = pick(Part::Batch)?;

    let missing: Vec<Part> = [(Part::Generator, generator), (Part::Validator, validator), (Part::Params, params)]
        .into_iter()
        .filter(|(_, b)| b.is_none())
        .map(|(p, _)| p)
        .collect();
    if !missing.is_empty() {
        return Err(BundleError::BundleIncomplete(missing));
    }

    let rows = param_lines(&params.unwrap().content);
    if rows.len() != expected_count {
        return Err(BundleError::ParamCountMismatch(rows.len(), expected_count));
    }
    GeneratorBundle::new(generator.unwrap().content.clone(), validator.unwrap().content.clone(), rows, batch.map(|b| b.content.clone()))
}

/// Formats a bundle as labelled fenced blocks, the shape [`parse_bundle`]
/// reads back.
pub fn format_bundle(bundle: &GeneratorBundle) -> String {
    let mut out = String::new();
    let mut block = |heading: &str, info: &str, body: &str| {
        out.push_str(&format!("### {heading}\n\n```{info}\n{body}"));
        if !body.ends_with('\n') {
            out.push('\n');
        }
        out.push_str("```\n\n");
    };
    block("Test case generator", "cpp", &bundle.generator_source);
    block("Validator", "cpp", &bundle.validator_source);
    block("Test case parameters", "text", &(bundle.param_rows.join("\n") + "\n"));
    if let Some(batch) = &bundle.batch_script {
        block("Batch file", "bat", batch);
    }
    out
}
