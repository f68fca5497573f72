use std::path::PathBuf;

use memelabel_agents::{media_type_for, ImageAttachment};
use memelabel_core::dataset::MemeRecord;

/// Where meme images are read from. Missing files are sent without an
/// image rather than failing the call.
#[derive(Debug, Clone)]
pub struct ImageSource {
    pub root: PathBuf,
    pub attach: bool,
}

impl ImageSource {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        ImageSource { root: root.into(), attach: true }
    }

    pub fn disabled() -> Self {
        ImageSource { root: PathBuf::new(), attach: false }
    }

    pub async fn load(&self, meme: &MemeRecord) -> Option<ImageAttachment> {
        if !self.attach {
            return None;
        }
        let bytes = tokio::fs::read(self.root.join(&meme.image_path)).await.ok()?;
        Some(ImageAttachment {
            media_type: media_type_for(&meme.image_path).unwrap_or("image/jpeg").to_string(),
            bytes,
        })
    }
}
