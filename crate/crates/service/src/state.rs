use std::collections::HashMap;
use std::path::{Path, PathBuf};

use memelabel_core::annotation::AnnotationRun;
use memelabel_core::dataset::{load_manifest, manifest_root, DatasetError, LoadOptions, MemeRecord};
use memelabel_core::HateLabel;

use crate::store::{source_name, HumanStore, StoreError};

#[derive(Debug, thiserror::Error)]
pub enum ServiceError {
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error("{0}")]
    Argument(String),
}

/// Everything the handlers read. Agent labels come from an optional
/// annotation run; human labels from the store.
#[derive(Debug)]
pub struct AppState {
    pub memes: Vec<MemeRecord>,
    index: HashMap<String, usize>,
    pub image_root: PathBuf,
    pub run: Option<AnnotationRun>,
    pub store: HumanStore,
}

impl AppState {
    pub fn new(
        memes: Vec<MemeRecord>,
        image_root: impl Into<PathBuf>,
        run: Option<AnnotationRun>,
        store: HumanStore,
    ) -> Result<Self, ServiceError> {
        let mut index = HashMap::with_capacity(memes.len());
        for (i, m) in memes.iter().enumerate() {
            if index.insert(m.id.clone(), i).is_some() {
                return Err(ServiceError::Argument(format!("duplicate meme id `{}`", m.id)));
            }
        }
        Ok(AppState { memes, index, image_root: image_root.into(), run, store })
    }

    /// Loads the manifest (images are not required to exist), an optional
    /// run directory and the label store.
    pub fn load(manifest: &Path, run_dir: Option<&Path>, store_dir: &Path) -> Result<Self, ServiceError> {
        let memes = load_manifest(manifest, &LoadOptions::without_image_check())?;
        let run = run_dir.map(AnnotationRun::load).transpose()?;
        let store = HumanStore::open(store_dir)?;
        Self::new(memes, manifest_root(manifest), run, store)
    }

    pub fn meme(&self, id: &str) -> Option<&MemeRecord> {
        self.index.get(id).map(|&i| &self.memes[i])
    }

    pub fn ids(&self) -> Vec<String> {
        self.memes.iter().map(|m| m.id.clone()).collect()
    }

    /// Annotator names in the run, in roster order.
    pub fn agent_sources(&self) -> Vec<String> {
        self.run.as_ref().map(|r| r.annotators().map(|e| e.name.clone()).collect()).unwrap_or_default()
    }

    /// Successful annotator labels for a meme.
    pub fn agent_labels(&self, id: &str) -> Vec<(String, HateLabel)> {
        self.run.as_ref().map(|r| r.successful_labels(id)).unwrap_or_default()
    }

    pub fn consolidated(&self, id: &str) -> Option<HateLabel> {
        self.run.as_ref()?.consolidated.get(id)?.label
    }

    /// Agent and human labels for a meme, with their source names.
    pub fn all_labels(&self, id: &str) -> Vec<(String, HateLabel)> {
        let mut labels = self.agent_labels(id);
        labels.extend(self.store.for_meme(id).into_iter().map(|h| (source_name(&h.annotator), h.label)));
        labels
    }
}
