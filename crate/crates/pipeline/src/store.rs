//! Run directories: creation, resumption and the response journal.

use std::fs::{self, File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use memelabel_core::annotation::{AgentResponse, AnnotationRun, RosterEntry, RunPaths};

use crate::{now, PipelineError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OpenMode {
    /// Fail if the directory exists.
    Create,
    /// Continue an existing run (or start one if absent).
    Resume,
    /// Replace an existing run directory.
    Force,
}

/// An open run directory. Responses are appended to the journal and
/// flushed to disk before [`RunStore::append`] returns.
#[derive(Debug)]
pub struct RunStore {
    paths: RunPaths,
    journal: Mutex<File>,
}

impl RunStore {
    /// Opens or creates the run at `dir` for `memes` from a manifest with
    /// `manifest_digest`. A new directory appears atomically (built under a
    /// temporary name, then renamed). Resuming checks that the manifest and
    /// meme scope are unchanged.
    pub fn open(
        dir: &Path,
        mode: OpenMode,
        manifest_digest: &str,
        memes: &[String],
        roster: &[RosterEntry],
    ) -> Result<(RunStore, AnnotationRun), PipelineError> {
        let exists = dir.exists();
        let run = match (exists, mode) {
            (true, OpenMode::Create) => return Err(PipelineError::RunExists(dir.to_path_buf())),
            (true, OpenMode::Resume) => {
                if !RunPaths::new(dir).run().exists() {
                    return Err(PipelineError::NotARun(dir.to_path_buf()));
                }
                let mut run = AnnotationRun::load(dir)?;
                if run.manifest_digest != manifest_digest {
                    return Err(PipelineError::ManifestChanged {
                        run: run.manifest_digest,
                        manifest: manifest_digest.to_string(),
                    });
                }
                if run.memes != memes {
                    return Err(PipelineError::ScopeChanged { run: run.memes.len(), now: memes.len() });
                }
                for entry in roster {
                    run.enroll(entry.clone());
                }
                run.updated_at = now();
                run.save(dir)?;
                run
            }
            (true, OpenMode::Force) => {
                if !RunPaths::new(dir).run().exists() && fs::read_dir(dir).map_err(|e| io(dir, e))?.next().is_some() {
                    // Refuse to wipe a directory that is not a run.
                    return Err(PipelineError::NotARun(dir.to_path_buf()));
                }
                fs::remove_dir_all(dir).map_err(|e| io(dir, e))?;
                create(dir, manifest_digest, memes, roster)?
            }
            (false, _) => create(dir, manifest_digest, memes, roster)?,
        };
        let paths = RunPaths::new(dir);
        let journal = OpenOptions::new()
            .create(true)
            .append(true)
            .open(paths.responses())
            .map_err(|e| io(&paths.responses(), e))?;
        Ok((RunStore { paths, journal: Mutex::new(journal) }, run))
    }

    /// Opens an existing run for consolidation or export.
    pub fn existing(dir: &Path) -> Result<(RunStore, AnnotationRun), PipelineError> {
        let paths = RunPaths::new(dir);
        if !paths.run().exists() {
            return Err(PipelineError::NotARun(dir.to_path_buf()));
        }
        let run = AnnotationRun::load(dir)?;
        let journal = OpenOptions::new()
            .create(true)
            .append(true)
            .open(paths.responses())
            .map_err(|e| io(&paths.responses(), e))?;
        Ok((RunStore { paths, journal: Mutex::new(journal) }, run))
    }

    pub fn paths(&self) -> &RunPaths {
        &self.paths
    }

    pub fn dir(&self) -> &Path {
        &self.paths.dir
    }

    pub fn append(&self, response: &AgentResponse) -> Result<(), PipelineError> {
        let mut line = serde_json::to_string(response).expect("response serializes");
        line.push('\n');
        let path = self.paths.responses();
        let mut journal = self.journal.lock().unwrap();
        journal.write_all(line.as_bytes()).and_then(|_| journal.sync_data()).map_err(|e| io(&path, e))
    }

    pub fn snapshot(&self, run: &mut AnnotationRun) -> Result<(), PipelineError> {
        run.updated_at = now();
        run.save(self.dir())?;
        Ok(())
    }
}

fn create(dir: &Path, digest: &str, memes: &[String], roster: &[RosterEntry]) -> Result<AnnotationRun, PipelineError> {
    let name = dir
        .file_name()
        .ok_or_else(|| PipelineError::Argument(format!("bad run directory {}", dir.display())))?
        .to_string_lossy()
        .into_owned();
    let parent = dir.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(parent).map_err(|e| io(parent, e))?;
    let staging: PathBuf = parent.join(format!(".{name}.creating-{}", std::process::id()));
    if staging.exists() {
        fs::remove_dir_all(&staging).map_err(|e| io(&staging, e))?;
    }
    fs::create_dir(&staging).map_err(|e| io(&staging, e))?;

    let mut run = AnnotationRun::new(name, digest, now());
    run.memes = memes.to_vec();
    for entry in roster {
        run.enroll(entry.clone());
    }
    run.save(&staging)?;
    File::create(staging.join(memelabel_core::annotation::RESPONSES_FILE)).map_err(|e| io(&staging, e))?;
    fs::rename(&staging, dir).map_err(|e| io(dir, e))?;
    Ok(run)
}

pub(crate) fn io(path: &Path, source: std::io::Error) -> PipelineError {
    PipelineError::Io { path: path.to_path_buf(), source }
}
