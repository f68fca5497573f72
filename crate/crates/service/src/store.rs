//! Durable store for human labels.
//!
//! `labels.journal.jsonl` is append-only: one [`HumanLabel`] per line,
//! fsynced before a write is acknowledged. `labels.snapshot.json` holds
//! the folded state and the number of journal lines it covers; loading
//! reads the snapshot and replays the rest of the journal. The latest
//! label per (meme, annotator) wins.

use std::collections::BTreeMap;
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use memelabel_core::dataset::{write_atomic, LabelRecord};
use memelabel_core::HateLabel;
use serde::{Deserialize, Serialize};

pub const JOURNAL_FILE: &str = "labels.journal.jsonl";
pub const SNAPSHOT_FILE: &str = "labels.snapshot.json";
pub const DEFAULT_ANNOTATOR: &str = "human";

/// Snapshot after this many journal lines beyond the last one.
const SNAPSHOT_EVERY: usize = 200;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HumanLabel {
    pub id: String,
    pub annotator: String,
    #[serde(flatten)]
    pub label: HateLabel,
    pub at: String,
}

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path} line {line}: {message}")]
    Corrupt { path: PathBuf, line: usize, message: String },
}

#[derive(Debug, Default, Serialize, Deserialize)]
struct Snapshot {
    journal_lines: usize,
    labels: Vec<HumanLabel>,
}

#[derive(Debug)]
struct Inner {
    /// (meme id, annotator) → label.
    labels: BTreeMap<(String, String), HumanLabel>,
    journal: File,
    journal_lines: usize,
    snapshot_lines: usize,
}

#[derive(Debug)]
pub struct HumanStore {
    dir: PathBuf,
    inner: Mutex<Inner>,
}

/// Source name under which an annotator's labels are reported.
pub fn source_name(annotator: &str) -> String {
    if annotator == DEFAULT_ANNOTATOR {
        DEFAULT_ANNOTATOR.to_string()
    } else {
        format!("human:{annotator}")
    }
}

/// The annotator behind a `human` / `human:<id>` source name.
pub fn annotator_of(source: &str) -> Option<&str> {
    if source == DEFAULT_ANNOTATOR {
        Some(DEFAULT_ANNOTATOR)
    } else {
        source.strip_prefix("human:").filter(|a| !a.is_empty())
    }
}

impl HumanStore {
    pub fn open(dir: impl Into<PathBuf>) -> Result<Self, StoreError> {
        let dir = dir.into();
        fs::create_dir_all(&dir).map_err(|e| io(&dir, e))?;
        let snap_path = dir.join(SNAPSHOT_FILE);
        let snapshot: Snapshot = match fs::read_to_string(&snap_path) {
            Ok(text) => serde_json::from_str(&text).map_err(|e| StoreError::Corrupt {
                path: snap_path.clone(),
                line: e.line(),
                message: e.to_string(),
            })?,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Snapshot::default(),
            Err(e) => return Err(io(&snap_path, e)),
        };
        let mut labels: BTreeMap<(String, String), HumanLabel> =
            snapshot.labels.into_iter().map(|l| ((l.id.clone(), l.annotator.clone()), l)).collect();

        let journal_path = dir.join(JOURNAL_FILE);
        let mut journal_lines = 0;
        if journal_path.exists() {
            let lines: Vec<String> = BufReader::new(File::open(&journal_path).map_err(|e| io(&journal_path, e))?)
                .lines()
                .collect::<Result<_, _>>()
                .map_err(|e| io(&journal_path, e))?;
            let total = lines.len();
            for (idx, line) in lines.iter().enumerate() {
                match serde_json::from_str::<HumanLabel>(line) {
                    Ok(label) => {
                        journal_lines += 1;
                        if journal_lines > snapshot.journal_lines {
                            labels.insert((label.id.clone(), label.annotator.clone()), label);
                        }
                    }
                    // An unacknowledged write torn by a crash.
                    Err(_) if idx + 1 == total => {
                        let good: String = lines[..idx].iter().map(|l| format!("{l}\n")).collect();
                        write_atomic(&journal_path, good.as_bytes()).map_err(|e| StoreError::Corrupt {
                            path: journal_path.clone(),
                            line: idx + 1,
                            message: e.to_string(),
                        })?;
                    }
                    Err(e) => {
                        return Err(StoreError::Corrupt { path: journal_path, line: idx + 1, message: e.to_string() })
                    }
                }
            }
        }
        let journal =
            OpenOptions::new().create(true).append(true).open(&journal_path).map_err(|e| io(&journal_path, e))?;
        Ok(HumanStore {
            dir,
            inner: Mutex::new(Inner {
                labels,
                journal,
                journal_lines,
                snapshot_lines: snapshot.journal_lines.min(journal_lines),
            }),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    /// Journals and applies a label; returns once it is on disk.
    pub fn put(&self, id: &str, annotator: &str, label: HateLabel) -> Result<HumanLabel, StoreError> {
        let record = HumanLabel {
            id: id.to_string(),
            annotator: annotator.to_string(),
            label,
            at: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true),
        };
        let mut line = serde_json::to_string(&record).expect("label serializes");
        line.push('\n');
        let path = self.dir.join(JOURNAL_FILE);
        let mut inner = self.inner.lock().unwrap();
        inner.journal.write_all(line.as_bytes()).and_then(|_| inner.journal.sync_data()).map_err(|e| io(&path, e))?;
        inner.journal_lines += 1;
        inner.labels.insert((record.id.clone(), record.annotator.clone()), record.clone());
        if inner.journal_lines - inner.snapshot_lines >= SNAPSHOT_EVERY {
            write_snapshot(&self.dir, &inner)?;
            inner.snapshot_lines = inner.journal_lines;
        }
        Ok(record)
    }

    pub fn snapshot(&self) -> Result<(), StoreError> {
        let mut inner = self.inner.lock().unwrap();
        write_snapshot(&self.dir, &inner)?;
        inner.snapshot_lines = inner.journal_lines;
        Ok(())
    }

    pub fn get(&self, id: &str, annotator: &str) -> Option<HumanLabel> {
        let inner = self.inner.lock().unwrap();
        inner.labels.get(&(id.to_string(), annotator.to_string())).cloned()
    }

    /// Every current label, ordered by meme id then annotator.
    pub fn all(&self) -> Vec<HumanLabel> {
        self.inner.lock().unwrap().labels.values().cloned().collect()
    }

    pub fn for_meme(&self, id: &str) -> Vec<HumanLabel> {
        let inner = self.inner.lock().unwrap();
        inner
            .labels
            .range((id.to_string(), String::new())..)
            .take_while(|((m, _), _)| m == id)
            .map(|(_, l)| l.clone())
            .collect()
    }

    pub fn annotators(&self) -> Vec<String> {
        let mut names: Vec<String> = self.all().into_iter().map(|l| l.annotator).collect();
        names.sort();
        names.dedup();
        names
    }

    /// One annotator's labels in the given meme order.
    pub fn export(&self, annotator: &str, order: &[String]) -> Vec<LabelRecord> {
        let inner = self.inner.lock().unwrap();
        order
            .iter()
            .filter_map(|id| inner.labels.get(&(id.clone(), annotator.to_string())))
            .map(|l| LabelRecord::new(l.id.clone(), l.label, source_name(annotator)))
            .collect()
    }
}

fn write_snapshot(dir: &Path, inner: &Inner) -> Result<(), StoreError> {
    let snapshot = Snapshot { journal_lines: inner.journal_lines, labels: inner.labels.values().cloned().collect() };
    let path = dir.join(SNAPSHOT_FILE);
    write_atomic(&path, &serde_json::to_vec(&snapshot).expect("snapshot serializes")).map_err(|e| StoreError::Corrupt {
        path,
        line: 0,
        message: e.to_string(),
    })
}

fn io(path: &Path, source: std::io::Error) -> StoreError {
    StoreError::Io { path: path.to_path_buf(), source }
}

#[cfg(test)]
mod tests {
    use super::*;
    use memelabel_core::{CoarseLabel, FineLabel};

    #[test]
    fn latest_label_wins_across_reopen_and_snapshot() {
        let dir = tempfile::tempdir().unwrap();
        {
            let store = HumanStore::open(dir.path()).unwrap();
            store.put("m1", "human", HateLabel::coarse_only(CoarseLabel::Hateful)).unwrap();
            store.snapshot().unwrap();
            store.put("m1", "human", HateLabel::from_fine(FineLabel::Sarcasm)).unwrap();
            store.put("m1", "alice", HateLabel::from_fine(FineLabel::Slurs)).unwrap();
        }
        let store = HumanStore::open(dir.path()).unwrap();
        assert_eq!(store.get("m1", "human").unwrap().label, HateLabel::from_fine(FineLabel::Sarcasm));
        assert_eq!(store.for_meme("m1").len(), 2);
        assert_eq!(store.annotators(), vec!["alice".to_string(), "human".to_string()]);
        let exported = store.export("alice", &["m0".into(), "m1".into()]);
        assert_eq!(exported.len(), 1);
        assert_eq!(exported[0].source, "human:alice");
    }

    #[test]
    fn torn_journal_tail_is_discarded() {
        let dir = tempfile::tempdir().unwrap();
        {
            let store = HumanStore::open(dir.path()).unwrap();
            store.put("m1", "human", HateLabel::from_fine(FineLabel::Humor)).unwrap();
        }
        let mut f = OpenOptions::new().append(true).open(dir.path().join(JOURNAL_FILE)).unwrap();
        f.write_all(b"{\"id\":\"m2\",\"annot").unwrap();
        drop(f);
        let store = HumanStore::open(dir.path()).unwrap();
        assert_eq!(store.all().len(), 1);
        store.put("m2", "human", HateLabel::from_fine(FineLabel::Humor)).unwrap();
        assert_eq!(HumanStore::open(dir.path()).unwrap().all().len(), 2);
    }

    #[test]
    fn source_names() {
        assert_eq!(source_name("human"), "human");
        assert_eq!(source_name("bob"), "human:bob");
        assert_eq!(annotator_of("human:bob"), Some("bob"));
        assert_eq!(annotator_of("human"), Some("human"));
        assert_eq!(annotator_of("human:"), None);
        assert_eq!(annotator_of("gpt4o"), None);
    }
}
