//! Records produced by an annotation run and their on-disk layout.
//!
//! A run directory holds:
//! - `run.json`: run metadata and consolidated labels (snapshot);
//! - `responses.jsonl`: append-only journal of every agent response;
//! - `labels.consolidated.jsonl`: exported consolidated labels;
//! - `failures.jsonl`: failed agent calls and unresolved memes.
//!
//! Annotator responses are not duplicated into `run.json`; loading a run
//! replays the journal, later lines superseding earlier ones.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::consolidation::ConsolidationMethod;
use crate::dataset::{write_atomic, DatasetError};
use crate::labels::HateLabel;
use crate::prompt::Phase;

pub const RUN_FILE: &str = "run.json";
pub const RESPONSES_FILE: &str = "responses.jsonl";
pub const CONSOLIDATED_FILE: &str = "labels.consolidated.jsonl";
pub const FAILURES_FILE: &str = "failures.jsonl";
pub const UNRESOLVED_FILE: &str = "unresolved.jsonl";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResponseStatus {
    Ok,
    ParseFailed,
    TransportFailed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AgentRole {
    Annotator,
    Consolidator,
}

/// One agent's answer for one meme. `parsed` is present exactly when
/// `status` is `ok`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgentResponse {
    pub meme_id: String,
    pub agent_name: String,
    pub phase: Phase,
    pub raw_text: String,
    pub parsed: Option<HateLabel>,
    pub latency_ms: u64,
    pub attempt_count: u32,
    pub status: ResponseStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl AgentResponse {
    pub fn is_ok(&self) -> bool {
        self.status == ResponseStatus::Ok
    }

    /// Whether a rerun should skip this (meme, agent) pair. Transport
    /// failures are retried; parse failures are final.
    pub fn is_settled(&self) -> bool {
        self.status != ResponseStatus::TransportFailed
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RosterEntry {
    pub name: String,
    pub model_id: String,
    pub role: AgentRole,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Consolidated {
    pub label: Option<HateLabel>,
    pub method: ConsolidationMethod,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotationRun {
    pub run_id: String,
    pub manifest_digest: String,
    pub roster: Vec<RosterEntry>,
    /// Meme ids in scope, in manifest order.
    pub memes: Vec<String>,
    pub consolidated: BTreeMap<String, Consolidated>,
    pub created_at: String,
    pub updated_at: String,
    /// Annotator responses per meme, rebuilt from the journal.
    #[serde(skip)]
    pub responses: BTreeMap<String, Vec<AgentResponse>>,
    /// Consolidator response per meme, rebuilt from the journal.
    #[serde(skip)]
    pub consolidator_responses: BTreeMap<String, AgentResponse>,
}

impl AnnotationRun {
    pub fn new(run_id: impl Into<String>, manifest_digest: impl Into<String>, now: impl Into<String>) -> Self {
        let now = now.into();
        AnnotationRun {
            run_id: run_id.into(),
            manifest_digest: manifest_digest.into(),
            roster: Vec::new(),
            memes: Vec::new(),
            consolidated: BTreeMap::new(),
            created_at: now.clone(),
            updated_at: now,
            responses: BTreeMap::new(),
            consolidator_responses: BTreeMap::new(),
        }
    }

    /// Adds a roster entry unless one with the same name exists.
    pub fn enroll(&mut self, entry: RosterEntry) {
        if let Some(existing) = self.roster.iter_mut().find(|e| e.name == entry.name) {
            *existing = entry;
        } else {
            self.roster.push(entry);
        }
    }

    pub fn annotators(&self) -> impl Iterator<Item = &RosterEntry> {
        self.roster.iter().filter(|e| e.role == AgentRole::Annotator)
    }

    /// Stores a response, replacing any earlier one for the same pair.
    pub fn record(&mut self, response: AgentResponse) {
        match response.phase {
            Phase::Annotation => {
                let slot = self.responses.entry(response.meme_id.clone()).or_default();
                match slot.iter_mut().find(|r| r.agent_name == response.agent_name) {
                    Some(existing) => *existing = response,
                    None => slot.push(response),
                }
            }
            Phase::Consolidation => {
                self.consolidator_responses.insert(response.meme_id.clone(), response);
            }
        }
    }

    pub fn response(&self, meme_id: &str, agent: &str) -> Option<&AgentResponse> {
        self.responses.get(meme_id)?.iter().find(|r| r.agent_name == agent)
    }

    /// Successful annotator labels for a meme, in roster order.
    pub fn successful_labels(&self, meme_id: &str) -> Vec<(String, HateLabel)> {
        let roster: Vec<&str> = self.annotators().map(|e| e.name.as_str()).collect();
        let mut labels: Vec<(usize, String, HateLabel)> = self
            .responses
            .get(meme_id)
            .into_iter()
            .flatten()
            .filter_map(|r| {
                let rank = roster.iter().position(|n| *n == r.agent_name)?;
                Some((rank, r.agent_name.clone(), r.parsed?))
            })
            .collect();
        labels.sort_by_key(|(rank, _, _)| *rank);
        labels.into_iter().map(|(_, name, label)| (name, label)).collect()
    }

    /// Every failed response, annotators first.
    pub fn failed_responses(&self) -> Vec<&AgentResponse> {
        let mut out: Vec<&AgentResponse> =
            self.memes.iter().filter_map(|id| self.responses.get(id)).flatten().filter(|r| !r.is_ok()).collect();
        out.extend(self.memes.iter().filter_map(|id| self.consolidator_responses.get(id)).filter(|r| !r.is_ok()));
        out
    }

    pub fn save(&self, dir: &Path) -> Result<(), DatasetError> {
        let json = serde_json::to_vec_pretty(self).expect("run serializes");
        write_atomic(&dir.join(RUN_FILE), &json)
    }

    /// Loads `run.json` and replays `responses.jsonl`. A truncated final
    /// journal line (from an interrupted write) is ignored.
    pub fn load(dir: &Path) -> Result<Self, DatasetError> {
        let run_path = dir.join(RUN_FILE);
        let text = fs::read_to_string(&run_path).map_err(|e| DatasetError::io(&run_path, e))?;
        let mut run: AnnotationRun = serde_json::from_str(&text)
            .map_err(|e| DatasetError::Json { line: e.line(), message: format!("{}: {e}", run_path.display()) })?;
        for response in read_journal(&dir.join(RESPONSES_FILE))? {
            run.record(response);
        }
        Ok(run)
    }
}

pub fn read_journal(path: &Path) -> Result<Vec<AgentResponse>, DatasetError> {
    let file = match fs::File::open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => return Err(DatasetError::io(path, e)),
    };
    let lines: Vec<String> =
        BufReader::new(file).lines().collect::<Result<_, _>>().map_err(|e| DatasetError::io(path, e))?;
    let last = lines.len();
    let mut out = Vec::with_capacity(lines.len());
    for (idx, line) in lines.iter().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str(line) {
            Ok(response) => out.push(response),
            Err(_) if idx + 1 == last => break,
            Err(e) => return Err(DatasetError::Json { line: idx + 1, message: format!("{}: {e}", path.display()) }),
        }
    }
    Ok(out)
}

/// Paths inside a run directory.
#[derive(Debug, Clone)]
pub struct RunPaths {
    pub dir: PathBuf,
}

impl RunPaths {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        RunPaths { dir: dir.into() }
    }

    pub fn run(&self) -> PathBuf {
        self.dir.join(RUN_FILE)
    }

    pub fn responses(&self) -> PathBuf {
        self.dir.join(RESPONSES_FILE)
    }

    pub fn consolidated(&self) -> PathBuf {
        self.dir.join(CONSOLIDATED_FILE)
    }

    pub fn failures(&self) -> PathBuf {
        self.dir.join(FAILURES_FILE)
    }

    pub fn unresolved(&self) -> PathBuf {
        self.dir.join(UNRESOLVED_FILE)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::labels::FineLabel;

    fn response(meme: &str, agent: &str, label: Option<HateLabel>) -> AgentResponse {
        AgentResponse {
            meme_id: meme.into(),
            agent_name: agent.into(),
            phase: Phase::Annotation,
            raw_text: label.map(|l| l.to_json()).unwrap_or_default(),
            parsed: label,
            latency_ms: 3,
            attempt_count: 1,
            status: if label.is_some() { ResponseStatus::Ok } else { ResponseStatus::TransportFailed },
            error: None,
        }
    }

    #[test]
    fn journal_replay_and_truncated_tail() {
        let dir = tempfile::tempdir().unwrap();
        let mut run = AnnotationRun::new("r1", "abc", "2024-01-01T00:00:00Z");
        run.memes = vec!["m1".into()];
        run.enroll(RosterEntry { name: "a".into(), model_id: "x".into(), role: AgentRole::Annotator });
        run.save(dir.path()).unwrap();
        let first = response("m1", "a", None);
        let second = response("m1", "a", Some(HateLabel::from_fine(FineLabel::Humor)));
        let mut journal = String::new();
        for r in [&first, &second] {
            journal.push_str(&serde_json::to_string(r).unwrap());
            journal.push('\n');
        }
        journal.push_str("{\"meme_id\":\"m1\",\"age");
        fs::write(dir.path().join(RESPONSES_FILE), journal).unwrap();

        let loaded = AnnotationRun::load(dir.path()).unwrap();
        assert_eq!(loaded.response("m1", "a"), Some(&second));
        assert_eq!(loaded.successful_labels("m1").len(), 1);
        assert!(loaded.failed_responses().is_empty());
    }
}
