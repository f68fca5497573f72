//! Annotation runs over a meme manifest: every annotator labels every
//! meme, disagreements go to a consolidator, and labels are exported per
//! source.
//!
//! Progress lives in a run directory (see
//! [`memelabel_core::annotation`]); an interrupted run resumes from its
//! response journal, and the shared response cache makes reruns free.

mod annotate;
mod consolidate;
mod export;
mod images;
mod store;

use std::path::PathBuf;

use thiserror::Error;

pub use annotate::{annotate_all, AnnotateStats};
pub use consolidate::{consolidate_all, ConsolidatePolicy, ConsolidateStats};
pub use export::{
    export_labels, failure_records, write_run_outputs, Export, FailureRecord, Unresolved, CONSOLIDATED_SOURCE,
};
pub use images::ImageSource;
pub use store::{OpenMode, RunStore};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("{}: run directory already exists (use --resume to continue it or --force to replace it)", .0.display())]
    RunExists(PathBuf),
    #[error("{}: not an annotation run directory", .0.display())]
    NotARun(PathBuf),
    #[error("manifest changed since the run started (run {run}, manifest {manifest})")]
    ManifestChanged { run: String, manifest: String },
    #[error("meme scope changed since the run started ({run} memes then, {now} now)")]
    ScopeChanged { run: usize, now: usize },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Dataset(#[from] memelabel_core::dataset::DatasetError),
    #[error(transparent)]
    Agent(#[from] memelabel_agents::AgentError),
    #[error("{0}")]
    Argument(String),
}

pub(crate) fn now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true)
}
