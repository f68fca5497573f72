use std::collections::HashMap;
use std::sync::Arc;

use futures::stream::{self, StreamExt};
use memelabel_agents::{Agent, ResponseCache};
use memelabel_core::annotation::{AnnotationRun, ResponseStatus};
use memelabel_core::dataset::MemeRecord;
use serde::Serialize;

use crate::images::ImageSource;
use crate::store::RunStore;
use crate::PipelineError;

/// How often `run.json` is rewritten while responses stream in.
const SNAPSHOT_EVERY: usize = 50;

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct AnnotateStats {
    /// (meme, agent) pairs in scope.
    pub pairs: usize,
    /// Pairs already settled by an earlier run and skipped.
    pub already_done: usize,
    /// Pairs answered from the response cache.
    pub cached: usize,
    /// Pairs that needed at least one HTTP request.
    pub requested: usize,
    pub ok: usize,
    pub parse_failed: usize,
    pub transport_failed: usize,
}

impl AnnotateStats {
    pub fn failures(&self) -> usize {
        self.parse_failed + self.transport_failed
    }

    pub fn invoked(&self) -> usize {
        self.cached + self.requested
    }
}

/// Calls every annotator on every meme in `run.memes` that does not
/// already have a settled response, journaling each answer as it
/// arrives. Transport failures from earlier runs are retried.
pub async fn annotate_all(
    run: &mut AnnotationRun,
    store: &RunStore,
    memes: &[MemeRecord],
    images: &ImageSource,
    annotators: &[Arc<Agent>],
    cache: &ResponseCache,
) -> Result<AnnotateStats, PipelineError> {
    let by_id: HashMap<&str, &MemeRecord> = memes.iter().map(|m| (m.id.as_str(), m)).collect();
    let mut stats = AnnotateStats::default();
    let mut work = Vec::new();
    for id in &run.memes {
        let meme = *by_id
            .get(id.as_str())
            .ok_or_else(|| PipelineError::Argument(format!("meme `{id}` is in the run but not the manifest")))?;
        for agent in annotators {
            stats.pairs += 1;
            match run.response(id, agent.name()) {
                Some(r) if r.is_settled() => {
                    stats.already_done += 1;
                    tally(&mut stats, r.status);
                }
                _ => work.push((meme, agent.clone())),
            }
        }
    }

    let parallel: usize = annotators.iter().map(|a| a.config().max_parallel).sum::<usize>().max(1);
    let mut results = stream::iter(work)
        .map(|(meme, agent)| async move {
            let image = images.load(meme).await;
            agent.invoke(cache, meme, image.as_ref(), None).await
        })
        .buffer_unordered(parallel);

    let mut since_snapshot = 0;
    while let Some(result) = results.next().await {
        let invocation = result?;
        if invocation.from_cache {
            stats.cached += 1;
        } else {
            stats.requested += 1;
        }
        tally(&mut stats, invocation.response.status);
        store.append(&invocation.response)?;
        run.record(invocation.response);
        since_snapshot += 1;
        if since_snapshot >= SNAPSHOT_EVERY {
            store.snapshot(run)?;
            since_snapshot = 0;
        }
    }
    store.snapshot(run)?;
    Ok(stats)
}

fn tally(stats: &mut AnnotateStats, status: ResponseStatus) {
    match status {
        ResponseStatus::Ok => stats.ok += 1,
        ResponseStatus::ParseFailed => stats.parse_failed += 1,
        ResponseStatus::TransportFailed => stats.transport_failed += 1,
    }
}
