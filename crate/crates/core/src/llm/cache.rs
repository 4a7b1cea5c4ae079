use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::RwLock;

use sha2::{Digest, Sha256};

use super::{ChatExchange, LlmError};

/// `sha256(model_id || 0x00 || prompt)` as lowercase hex.
pub fn cache_key(model_id: &str, prompt: &str) -> String {
    let mut h = Sha256::new();
    h.update(model_id.as_bytes());
    h.update([0u8]);
    h.update(prompt.as_bytes());
    hex::encode(h.finalize())
}

/// Directory of `{key}.json` transcripts. Reads are shared, writes exclusive
/// and land via rename so a reader never sees a partial file.
pub struct TranscriptCache {
    dir: PathBuf,
    lock: RwLock<()>,
}

impl TranscriptCache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        TranscriptCache { dir: dir.into(), lock: RwLock::new(()) }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path_for(&self, key: &str) -> PathBuf {
        self.dir.join(format!("{key}.json"))
    }

    pub fn get(&self, key: &str) -> Result<Option<ChatExchange>, LlmError> {
        let _guard = self.lock.read().unwrap_or_else(|e| e.into_inner());
        let path = self.path_for(key);
        let text = match fs::read_to_string(&path) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
            Err(e) => return Err(LlmError::Cache(format!("{}: {e}", path.display()))),
        };
        let exchange: ChatExchange = serde_json::from_str(&text).map_err(|e| LlmError::Cache(format!("{}: {e}", path.display())))?;
        if exchange.key() != key {
            return Err(LlmError::Cache(format!("{} does not match its key", path.display())));
        }
        Ok(Some(exchange))
    }

    pub fn put(&self, exchange: &ChatExchange) -> Result<PathBuf, LlmError> {
        let _guard = self.lock.write().unwrap_or_else(|e| e.into_inner());
        let err = |e: std::io::Error| LlmError::Cache(format!("{}: {e}", self.dir.display()));
        fs::create_dir_all(&self.dir).map_err(err)?;
        let path = self.path_for(&exchange.key());
        let mut tmp = tempfile::NamedTempFile::new_in(&self.dir).map_err(err)?;
        let json = serde_json::to_string_pretty(exchange).map_err(|e| LlmError::Cache(e.to_string()))?;
        tmp.write_all(json.as_bytes()).map_err(err)?;
        tmp.write_all(b"\n").map_err(err)?;
        tmp.persist(&path).map_err(|e| err(e.error))?;
        Ok(path)
    }
}
