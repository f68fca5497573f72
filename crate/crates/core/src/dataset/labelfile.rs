use std::collections::{HashMap, HashSet};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{write_atomic, DatasetError};
use crate::labels::HateLabel;

/// One line of a label file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelRecord {
    pub id: String,
    #[serde(flatten)]
    pub label: HateLabel,
    #[serde(default)]
    pub source: String,
}

impl LabelRecord {
    pub fn new(id: impl Into<String>, label: HateLabel, source: impl Into<String>) -> Self {
        LabelRecord { id: id.into(), label, source: source.into() }
    }
}

pub fn parse_labels(text: &str) -> Result<Vec<LabelRecord>, DatasetError> {
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let record: LabelRecord = serde_json::from_str(line).map_err(|e| {
            let message = e.to_string();
            if e.is_data() {
                DatasetError::Schema { line: line_no, message }
            } else {
                DatasetError::Json { line: line_no, message }
            }
        })?;
        if !seen.insert(record.id.clone()) {
            return Err(DatasetError::DuplicateId { id: record.id, line: line_no });
        }
        out.push(record);
    }
    Ok(out)
}

pub fn load_labels(path: &Path) -> Result<Vec<LabelRecord>, DatasetError> {
    let text = fs::read_to_string(path).map_err(|e| DatasetError::io(path, e))?;
    parse_labels(&text)
}

pub fn render_labels(records: &[LabelRecord]) -> String {
    let mut out = String::new();
    for record in records {
        out.push_str(&serde_json::to_string(record).expect("label record serializes"));
        out.push('\n');
    }
    out
}

pub fn write_labels(path: &Path, records: &[LabelRecord]) -> Result<(), DatasetError> {
    write_atomic(path, render_labels(records).as_bytes())
}

/// Labels keyed by meme id.
#[derive(Debug, Clone, Default)]
pub struct LabelSet {
    labels: HashMap<String, HateLabel>,
}

impl LabelSet {
    pub fn get(&self, id: &str) -> Option<&HateLabel> {
        self.labels.get(id)
    }

    pub fn insert(&mut self, id: impl Into<String>, label: HateLabel) {
        self.labels.insert(id.into(), label);
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

impl<'a> FromIterator<&'a LabelRecord> for LabelSet {
    fn from_iter<I: IntoIterator<Item = &'a LabelRecord>>(iter: I) -> Self {
        LabelSet { labels: iter.into_iter().map(|r| (r.id.clone(), r.label)).collect() }
    }
}

impl FromIterator<(String, HateLabel)> for LabelSet {
    fn from_iter<I: IntoIterator<Item = (String, HateLabel)>>(iter: I) -> Self {
        LabelSet { labels: iter.into_iter().collect() }
    }
}
