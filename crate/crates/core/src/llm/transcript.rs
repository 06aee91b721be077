use std::fs::{self, File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use super::LlmError;

#[derive(Serialize, Deserialize)]
struct Entry {
    key: String,
    response: String,
}

struct Inner {
    entries: IndexMap<String, String>,
    sink: Option<File>,
}

/// Request-key to response map, optionally backed by a JSONL file
/// (`{"key", "response"}` per line) that new entries are appended to.
pub struct Transcript {
    path: Option<PathBuf>,
    inner: Mutex<Inner>,
}

impl std::fmt::Debug for Transcript {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Transcript")
            .field("path", &self.path)
            .field("entries", &self.len())
            .finish()
    }
}

impl Transcript {
    pub fn in_memory() -> Self {
        Transcript {
            path: None,
            inner: Mutex::new(Inner {
                entries: IndexMap::new(),
                sink: None,
            }),
        }
    }

    /// Loads an existing transcript; a missing file yields an empty one.
    /// New entries are appended to the same file.
    pub fn open(path: impl AsRef<Path>) -> Result<Self, LlmError> {
        let path = path.as_ref().to_path_buf();
        let mut entries = IndexMap::new();
        if path.exists() {
            let raw = fs::read_to_string(&path)
                .map_err(|e| LlmError::Transcript(format!("{}: {e}", path.display())))?;
            for (i, line) in raw.lines().enumerate() {
                if line.trim().is_empty() {
                    continue;
                }
                let entry: Entry = serde_json::from_str(line).map_err(|e| {
                    LlmError::Transcript(format!("{}:{}: {e}", path.display(), i + 1))
                })?;
                entries.insert(entry.key, entry.response);
            }
        }
        Ok(Transcript {
            path: Some(path),
            inner: Mutex::new(Inner {
                entries,
                sink: None,
            }),
        })
    }

    pub fn path(&self) -> Option<&Path> {
        self.path.as_deref()
    }

    pub fn len(&self) -> usize {
        self.inner.lock().unwrap().entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, key: &str) -> Option<String> {
        self.inner.lock().unwrap().entries.get(key).cloned()
    }

    /// Adds an entry unless the key is already present. Returns whether the
    /// entry was new.
    pub fn insert(&self, key: String, response: String) -> Result<bool, LlmError> {
        let mut inner = self.inner.lock().unwrap();
        if inner.entries.contains_key(&key) {
            return Ok(false);
        }
        if let Some(path) = &self.path {
            if inner.sink.is_none() {
                let file = OpenOptions::new()
                    .create(true)
                    .append(true)
                    .open(path)
                    .map_err(|e| LlmError::Transcript(format!("{}: {e}", path.display())))?;
                inner.sink = Some(file);
            }
            let mut line = serde_json::to_string(&Entry {
                key: key.clone(),
                response: response.clone(),
            })
            .map_err(|e| LlmError::Transcript(e.to_string()))?;
            line.push('\n');
            inner
                .sink
                .as_mut()
                .unwrap()
                .write_all(line.as_bytes())
                .map_err(|e| LlmError::Transcript(format!("{}: {e}", path.display())))?;
        }
        inner.entries.insert(key, response);
        Ok(true)
    }

    pub fn keys(&self) -> Vec<String> {
        self.inner.lock().unwrap().entries.keys().cloned().collect()
    }
}
