//! Persistent response cache.
//!
//! Entries are keyed by (agent name, model id, prompt hash, meme id) and
//! stored as an append-only JSONL journal. Opening the cache replays the
//! journal; a later line for the same key wins. [`ResponseCache::compact`]
//! rewrites the journal with one line per key.
//!
//! The prompt hash is the lowercase hex SHA-256 of the UTF-8 prompt text,
//! a single `\n` byte, and the lowercase hex SHA-256 of the image bytes
//! (the empty string when no image is attached). See [`prompt_hash`].

use std::collections::HashMap;
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::{Mutex, RwLock};

use memelabel_core::annotation::{AgentResponse, ResponseStatus};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CacheKey {
    pub agent_name: String,
    pub model_id: String,
    pub prompt_hash: String,
    pub meme_id: String,
}

#[derive(Serialize, Deserialize)]
struct Entry {
    #[serde(flatten)]
    key: CacheKey,
    response: AgentResponse,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn prompt_hash(prompt_text: &str, image_digest: &str) -> String {
    let mut h = Sha256::new();
    h.update(prompt_text.as_bytes());
    h.update(b"\n");
    h.update(image_digest.as_bytes());
    hex::encode(h.finalize())
}

#[derive(Debug, thiserror::Error)]
pub enum CacheError {
    #[error("cache {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("cache {path} line {line}: {message}")]
    Corrupt { path: PathBuf, line: usize, message: String },
}

/// Safe to share between tasks of one process. Two processes must not
/// write the same cache file at once.
#[derive(Debug)]
pub struct ResponseCache {
    path: PathBuf,
    entries: RwLock<HashMap<CacheKey, AgentResponse>>,
    writer: Mutex<File>,
}

impl ResponseCache {
    /// Opens (creating if needed) the journal at `path`. A truncated last
    /// line is dropped and the file is compacted to remove it.
    pub fn open(path: impl Into<PathBuf>) -> Result<Self, CacheError> {
        let path = path.into();
        let io = |source| CacheError::Io { path: path.clone(), source };
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            fs::create_dir_all(parent).map_err(io)?;
        }
        let mut entries = HashMap::new();
        let mut lines_read = 0usize;
        let mut torn_tail = false;
        if path.exists() {
            let lines: Vec<String> =
                BufReader::new(File::open(&path).map_err(io)?).lines().collect::<Result<_, _>>().map_err(io)?;
            let last = lines.len();
            for (idx, line) in lines.iter().enumerate() {
                if line.trim().is_empty() {
                    continue;
                }
                match serde_json::from_str::<Entry>(line) {
                    Ok(e) => {
                        lines_read += 1;
                        entries.insert(e.key, e.response);
                    }
                    Err(_) if idx + 1 == last => torn_tail = true,
                    Err(e) => {
                        return Err(CacheError::Corrupt { path: path.clone(), line: idx + 1, message: e.to_string() })
                    }
                }
            }
        }
        let cache =
            ResponseCache { writer: Mutex::new(open_append(&path).map_err(io)?), path, entries: RwLock::new(entries) };
        if torn_tail || lines_read > cache.len() {
            cache.compact()?;
        }
        Ok(cache)
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn len(&self) -> usize {
        self.entries.read().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, key: &CacheKey) -> Option<AgentResponse> {
        self.entries.read().unwrap().get(key).cloned()
    }

    /// Whether a response of this status is worth caching.
    pub fn cacheable(response: &AgentResponse) -> bool {
        matches!(response.status, ResponseStatus::Ok | ResponseStatus::ParseFailed)
    }

    /// Records a response. Transport failures are ignored so that they are
    /// retried next time.
    pub fn put(&self, key: CacheKey, response: AgentResponse) -> Result<(), CacheError> {
        if !Self::cacheable(&response) {
            return Ok(());
        }
        let mut line = serde_json::to_string(&Entry { key: key.clone(), response: response.clone() })
            .expect("cache entry serializes");
        line.push('\n');
        {
            let mut w = self.writer.lock().unwrap();
            w.write_all(line.as_bytes())
                .and_then(|_| w.flush())
                .map_err(|source| CacheError::Io { path: self.path.clone(), source })?;
        }
        self.entries.write().unwrap().insert(key, response);
        Ok(())
    }

    /// Rewrites the journal with one line per key (sorted), atomically.
    pub fn compact(&self) -> Result<(), CacheError> {
        let io = |source| CacheError::Io { path: self.path.clone(), source };
        let mut w = self.writer.lock().unwrap();
        let entries = self.entries.read().unwrap();
        let mut rows: Vec<(&CacheKey, &AgentResponse)> = entries.iter().collect();
        rows.sort_by(|a, b| {
            (&a.0.agent_name, &a.0.meme_id, &a.0.prompt_hash, &a.0.model_id).cmp(&(
                &b.0.agent_name,
                &b.0.meme_id,
                &b.0.prompt_hash,
                &b.0.model_id,
            ))
        });
        let mut text = String::new();
        for (key, response) in rows {
            text.push_str(
                &serde_json::to_string(&Entry { key: key.clone(), response: response.clone() })
                    .expect("cache entry serializes"),
            );
            text.push('\n');
        }
        let tmp = self.path.with_extension("jsonl.tmp");
        {
            let mut f = File::create(&tmp).map_err(io)?;
            f.write_all(text.as_bytes()).map_err(io)?;
            f.sync_all().map_err(io)?;
        }
        fs::rename(&tmp, &self.path).map_err(io)?;
        *w = open_append(&self.path).map_err(io)?;
        Ok(())
    }
}

fn open_append(path: &Path) -> std::io::Result<File> {
    OpenOptions::new().create(true).append(true).open(path)
}
