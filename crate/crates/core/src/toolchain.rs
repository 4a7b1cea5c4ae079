//! Compiler invocation and a content-addressed build cache.

use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

/// The testlib-compatible header shipped with the crate. It is written into
/// every build cache so compilation does not depend on the host.
pub const TESTLIB_HEADER: &str = include_str!("../assets/testlib/testlib.h");

const COMPILE_TIMEOUT: Duration = Duration::from_secs(120);
const DIAGNOSTIC_BYTES: usize = 16 * 1024;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ToolchainError {
    #[error("invalid toolchain `{id}`: {reason}")]
    Invalid { id: String, reason: String },
    #[error("compilation failed:\n{0}")]
    CompileError(String),
    #[error("compiler unavailable: {0}")]
    Unavailable(String),
    #[error("build cache i/o error: {0}")]
    Io(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ToolchainSpec {
    pub toolchain_id: String,
    /// Argument vector with `{src}` and `{out}` each appearing exactly once.
    pub compile_command: Vec<String>,
    pub source_suffix: String,
    #[serde(default)]
    pub header_search_paths: Vec<PathBuf>,
    /// Flag prefixed to each header search path.
    #[serde(default = "default_include_flag")]
    pub include_flag: String,
}

fn default_include_flag() -> String {
    "-I".to_string()
}

impl ToolchainSpec {
    pub fn new(
        toolchain_id: impl Into<String>,
        compile_command: Vec<String>,
        source_suffix: impl Into<String>,
    ) -> Result<Self, ToolchainError> {
        let spec = ToolchainSpec {
            toolchain_id: toolchain_id.into(),
            compile_command,
            source_suffix: source_suffix.into(),
            header_search_paths: Vec::new(),
            include_flag: default_include_flag(),
        };
        spec.validate()?;
        Ok(spec)
    }

    /// `g++ -std=c++17 -O2`, the contest default.
    pub fn cpp17() -> Self {
        let cmd = ["g++", "-std=c++17", "-O2", "-pipe", "-o", "{out}", "{src}"];
        ToolchainSpec::new("cpp17", cmd.iter().map(|s| s.to_string()).collect(), ".cpp").expect("builtin toolchain is valid")
    }

    pub fn validate(&self) -> Result<(), ToolchainError> {
        let invalid = |reason: String| ToolchainError::Invalid { id: self.toolchain_id.clone(), reason };
        if self.toolchain_id.is_empty() {
            return Err(invalid("empty toolchain id".into()));
        }
        if self.compile_command.is_empty() {
            return Err(invalid("empty compile command".into()));
        }
        for slot in ["{src}", "{out}"] {
            let n: usize = self.compile_command.iter().map(|a| a.matches(slot).count()).sum();
            if n != 1 {
                return Err(invalid(format!("compile command must contain {slot} exactly once, found {n}")));
            }
        }
        Ok(())
    }

    fn argv(&self, src: &Path, out: &Path, include_dirs: &[PathBuf]) -> Vec<String> {
        let mut argv = vec![self.compile_command[0].clone()];
        for dir in include_dirs.iter().chain(&self.header_search_paths) {
            argv.push(format!("{}{}", self.include_flag, dir.display()));
        }
        for arg in &self.compile_command[1..] {
            argv.push(arg.replace("{src}", &src.to_string_lossy()).replace("{out}", &out.to_string_lossy()));
        }
        argv
    }

    fn fingerprint(&self) -> String {
        serde_json::to_string(self).expect("toolchain serializes")
    }
}

/// `{root}/{sha256(toolchain, source)}/prog`. Identical sources compile once.
#[derive(Debug, Clone)]
pub struct BuildCache {
    root: PathBuf,
}

impl BuildCache {
    pub fn new(root: impl Into<PathBuf>) -> Result<Self, ToolchainError> {
        let root = root.into();
        let include = root.join("include");
        fs::create_dir_all(&include).map_err(|e| ToolchainError::Io(format!("{}: {e}", include.display())))?;
        let header = include.join("testlib.h");
        if fs::read_to_string(&header).ok().as_deref() != Some(TESTLIB_HEADER) {
            fs::write(&header, TESTLIB_HEADER).map_err(|e| ToolchainError::Io(format!("{}: {e}", header.display())))?;
        }
        Ok(BuildCache { root })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn include_dir(&self) -> PathBuf {
        self.root.join("include")
    }
}

/// Compiles `source` and returns the path of the executable.
pub fn compile_component(source: &str, toolchain: &ToolchainSpec, cache: &BuildCache) -> Result<PathBuf, ToolchainError> {
    toolchain.validate()?;
    let mut h = Sha256::new();
    h.update(toolchain.fingerprint().as_bytes());
    h.update([0u8]);
    h.update(TESTLIB_HEADER.as_bytes());
    h.update([0u8]);
    h.update(source.as_bytes());
    let key = hex::encode(h.finalize());
    let dir = cache.root.join(&key[..32]);
    let exe = dir.join("prog");
    if exe.is_file() {
        return Ok(exe);
    }
    let io = |e: std::io::Error| ToolchainError::Io(format!("{}: {e}", dir.display()));
    fs::create_dir_all(&dir).map_err(io)?;
    let src = dir.join(format!("main{}", toolchain.source_suffix));
    fs::write(&src, source).map_err(io)?;
    // Build to a unique name and rename, so concurrent builds of the same
    // source never observe a half-written binary.
    let tmp = tempfile::Builder::new().prefix("prog-").tempfile_in(&dir).map_err(io)?.into_temp_path();
    let tmp_path = tmp.to_path_buf();
    let argv = toolchain.argv(&src, &tmp_path, &[cache.include_dir()]);
    let diagnostics = run_compiler(&argv, &dir)?;
    if let Some(diag) = diagnostics {
        return Err(ToolchainError::CompileError(diag));
    }
    fs::rename(&tmp_path, &exe).map_err(io)?;
    let _ = tmp.keep();
    Ok(exe)
}

/// Runs the compiler; `Ok(Some(diagnostics))` on a failed compile.
fn run_compiler(argv: &[String], cwd: &Path) -> Result<Option<String>, ToolchainError> {
    log::debug!("compile: {}", argv.join(" "));
    let mut child = Command::new(&argv[0])
        .args(&argv[1..])
        .current_dir(cwd)
        .stdin(Stdio::null())
        .stdout(Stdio::null())
        .stderr(Stdio::piped())
        .spawn()
        .map_err(|e| ToolchainError::Unavailable(format!("{}: {e}", argv[0])))?;
    let mut stderr = child.stderr.take().expect("piped stderr");
    let reader = std::thread::spawn(move || {
        let mut buf = Vec::new();
        let _ = stderr.read_to_end(&mut buf);
        buf
    });
    let start = Instant::now();
    let status = loop {
        if let Some(status) = child.try_wait().map_err(|e| ToolchainError::Io(e.to_string()))? {
            break Some(status);
        }
        if start.elapsed() > COMPILE_TIMEOUT {
            let _ = child.kill();
            let _ = child.wait();
            break None;
        }
        std::thread::sleep(Duration::from_millis(10));
    };
    let stderr = reader.join().unwrap_or_default();
    let mut diag = String::from_utf8_lossy(&stderr[..stderr.len().min(DIAGNOSTIC_BYTES)]).into_owned();
    match status {
        Some(s) if s.success() => Ok(None),
        Some(s) => {
            if diag.is_empty() {
                diag = format!("compiler exited with {s}");
            }
            Ok(Some(diag))
        }
        None => Ok(Some(format!("compiler timed out after {}s\n{diag}", COMPILE_TIMEOUT.as_secs()))),
    }
}
