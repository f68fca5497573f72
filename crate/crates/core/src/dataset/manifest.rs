use std::collections::HashSet;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::DatasetError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Propaganda {
    Propagandistic,
    NotPropagandistic,
}

impl Propaganda {
    pub fn as_str(self) -> &'static str {
        match self {
            Propaganda::Propagandistic => "propagandistic",
            Propaganda::NotPropagandistic => "not_propagandistic",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Dev,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Dev, Split::Test];

    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Dev => "dev",
            Split::Test => "test",
        }
    }

    pub fn title(self) -> &'static str {
        match self {
            Split::Train => "Train",
            Split::Dev => "Dev",
            Split::Test => "Test",
        }
    }
}

impl std::str::FromStr for Split {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Split::ALL
            .into_iter()
            .find(|split| split.as_str() == s)
            .ok_or_else(|| format!("unknown split `{s}` (expected train, dev or test)"))
    }
}

/// One meme from a manifest.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MemeRecord {
    pub id: String,
    pub image_path: String,
    #[serde(default)]
    pub text: String,
    pub propaganda: Propaganda,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub split: Option<Split>,
}

#[derive(Debug, Clone)]
pub struct LoadOptions {
    pub check_images: bool,
    /// Directory image paths are resolved against. Defaults to the
    /// manifest's parent directory.
    pub root: Option<PathBuf>,
}

impl Default for LoadOptions {
    fn default() -> Self {
        LoadOptions { check_images: true, root: None }
    }
}

impl LoadOptions {
    pub fn without_image_check() -> Self {
        LoadOptions { check_images: false, root: None }
    }
}

/// Directory image paths in `manifest` are relative to.
pub fn manifest_root(manifest: &Path) -> PathBuf {
    match manifest.parent() {
        Some(parent) if !parent.as_os_str().is_empty() => parent.to_path_buf(),
        _ => PathBuf::from("."),
    }
}

/// Reads and validates a line-delimited JSON manifest. Blank lines are
/// skipped; record order is preserved.
pub fn load_manifest(path: &Path, options: &LoadOptions) -> Result<Vec<MemeRecord>, DatasetError> {
    let file = fs::File::open(path).map_err(|e| DatasetError::io(path, e))?;
    let root = options.root.clone().unwrap_or_else(|| manifest_root(path));
    let mut reader = BufReader::new(file);
    let mut records = Vec::new();
    let mut seen = HashSet::new();
    let mut buf = Vec::new();
    let mut line_no = 0;
    loop {
        buf.clear();
        let n = reader.read_until(b'\n', &mut buf).map_err(|e| DatasetError::io(path, e))?;
        if n == 0 {
            break;
        }
        line_no += 1;
        let line = std::str::from_utf8(&buf)
            .map_err(|_| DatasetError::Schema { line: line_no, message: "line is not valid UTF-8".into() })?;
        if line.trim().is_empty() {
            continue;
        }
        let record: MemeRecord = serde_json::from_str(line).map_err(|e| {
            let message = e.to_string();
            if e.is_data() {
                DatasetError::Schema { line: line_no, message }
            } else {
                DatasetError::Json { line: line_no, message }
            }
        })?;
        if record.id.trim().is_empty() {
            return Err(DatasetError::Schema { line: line_no, message: "`id` must be non-empty".into() });
        }
        if !seen.insert(record.id.clone()) {
            return Err(DatasetError::DuplicateId { id: record.id, line: line_no });
        }
        if options.check_images {
            let image = root.join(&record.image_path);
            if fs::File::open(&image).is_err() {
                return Err(DatasetError::MissingImage { line: line_no, id: record.id, path: image });
            }
        }
        records.push(record);
    }
    Ok(records)
}

pub fn write_manifest(path: &Path, records: &[MemeRecord]) -> Result<(), DatasetError> {
    let mut out = String::new();
    for record in records {
        out.push_str(&serde_json::to_string(record).expect("record serializes"));
        out.push('\n');
    }
    write_atomic(path, out.as_bytes())
}

/// Writes via a sibling temp file and rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), DatasetError> {
    let dir = manifest_root(path);
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_else(|| "out".into());
    let tmp = dir.join(format!(".{name}.tmp"));
    let mut file = fs::File::create(&tmp).map_err(|e| DatasetError::io(&tmp, e))?;
    file.write_all(bytes).map_err(|e| DatasetError::io(&tmp, e))?;
    file.sync_all().map_err(|e| DatasetError::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| DatasetError::io(path, e))
}

/// Hex SHA-256 of a file's bytes.
pub fn file_digest(path: &Path) -> Result<String, DatasetError> {
    let bytes = fs::read(path).map_err(|e| DatasetError::io(path, e))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}
