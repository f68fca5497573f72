//! Meme manifests, label files, splits and dataset statistics.

mod labelfile;
mod manifest;
mod split;
mod stats;

use std::path::{Path, PathBuf};

use thiserror::Error;

pub use labelfile::{load_labels, parse_labels, render_labels, write_labels, LabelRecord, LabelSet};
pub use manifest::{
    file_digest, load_manifest, manifest_root, write_atomic, write_manifest, LoadOptions, MemeRecord, Propaganda, Split,
};
pub use split::{largest_remainder, stratified_split, SplitRatios};
pub use stats::{
    class_weights, coarse_counts, crosstab, distribution, ClassWeights, CrossTab, DistributionReport, SplitDistribution,
};

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: malformed JSON: {message}")]
    Json { line: usize, message: String },
    #[error("line {line}: schema error: {message}")]
    Schema { line: usize, message: String },
    #[error("line {line}: duplicate id `{id}`")]
    DuplicateId { id: String, line: usize },
    #[error("line {line}: image for `{id}` not found at {}", path.display())]
    MissingImage { line: usize, id: String, path: PathBuf },
    #[error("{0}")]
    Argument(String),
}

impl DatasetError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        DatasetError::Io { path: path.to_path_buf(), source }
    }
}
