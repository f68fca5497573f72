use std::collections::HashMap;

use futures::stream::{self, StreamExt};
use memelabel_agents::{Agent, ResponseCache};
use memelabel_core::annotation::{AnnotationRun, Consolidated};
use memelabel_core::consolidation::{majority_vote, unanimous, ConsolidationMethod};
use memelabel_core::dataset::MemeRecord;
use memelabel_core::prompt::Candidate;
use memelabel_core::HateLabel;
use serde::Serialize;

use crate::images::ImageSource;
use crate::store::RunStore;
use crate::PipelineError;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ConsolidatePolicy {
    /// Send unanimous memes to the consolidator too.
    pub consolidate_all: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ConsolidateStats {
    pub memes: usize,
    /// Memes whose successful annotators agreed.
    pub unanimous: usize,
    /// Memes sent to the consolidator.
    pub consolidator_calls: usize,
    /// Of those, answered from the response cache.
    pub consolidator_cached: usize,
    pub llm_consolidator: usize,
    pub majority_vote: usize,
    pub unresolved: usize,
}

enum Plan {
    Settled(Consolidated),
    Ask(Vec<(String, HateLabel)>),
}

/// Assigns every meme in the run a consolidated label. Memes whose
/// successful annotator labels agree take the shared label (method
/// `majority_vote`) unless `policy.consolidate_all`; the rest go to the
/// consolidator, falling back to majority vote when it fails or is not
/// configured. Memes without any successful annotator label are
/// unresolved.
pub async fn consolidate_all(
    run: &mut AnnotationRun,
    store: &RunStore,
    memes: &[MemeRecord],
    images: &ImageSource,
    consolidator: Option<&Agent>,
    cache: &ResponseCache,
    policy: ConsolidatePolicy,
) -> Result<ConsolidateStats, PipelineError> {
    let by_id: HashMap<&str, &MemeRecord> = memes.iter().map(|m| (m.id.as_str(), m)).collect();
    let mut stats = ConsolidateStats { memes: run.memes.len(), ..Default::default() };
    let mut asks = Vec::new();
    for id in run.memes.clone() {
        let labelled = run.successful_labels(&id);
        let labels: Vec<HateLabel> = labelled.iter().map(|(_, l)| *l).collect();
        let agreed = unanimous(&labels);
        if agreed.is_some() {
            stats.unanimous += 1;
        }
        let plan = match (agreed, consolidator) {
            _ if labels.is_empty() => {
                Plan::Settled(Consolidated { label: None, method: ConsolidationMethod::Unresolved })
            }
            (Some(label), _) if !policy.consolidate_all => {
                Plan::Settled(Consolidated { label: Some(label), method: ConsolidationMethod::MajorityVote })
            }
            (_, Some(_)) => Plan::Ask(labelled),
            (_, None) => Plan::Settled(fallback(&labels)),
        };
        match plan {
            Plan::Settled(c) => {
                run.consolidated.insert(id, c);
            }
            Plan::Ask(labelled) => {
                let meme = *by_id.get(id.as_str()).ok_or_else(|| {
                    PipelineError::Argument(format!("meme `{id}` is in the run but not the manifest"))
                })?;
                asks.push((meme, labelled));
            }
        }
    }

    if let Some(agent) = consolidator {
        let mut results = stream::iter(asks)
            .map(|(meme, labelled)| async move {
                let candidates: Vec<Candidate> = labelled
                    .iter()
                    .map(|(source, label)| Candidate { source: source.clone(), label: *label })
                    .collect();
                let image = images.load(meme).await;
                let inv = agent.invoke(cache, meme, image.as_ref(), Some(&candidates)).await;
                (meme.id.clone(), labelled, inv)
            })
            .buffer_unordered(agent.config().max_parallel);
        while let Some((id, labelled, inv)) = results.next().await {
            let inv = inv?;
            stats.consolidator_calls += 1;
            if inv.from_cache {
                stats.consolidator_cached += 1;
            }
            let decided = match inv.response.parsed {
                Some(label) if inv.response.is_ok() => {
                    Consolidated { label: Some(label), method: ConsolidationMethod::LlmConsolidator }
                }
                _ => fallback(&labelled.iter().map(|(_, l)| *l).collect::<Vec<_>>()),
            };
            store.append(&inv.response)?;
            run.record(inv.response);
            run.consolidated.insert(id, decided);
        }
    }

    for c in run.consolidated.values() {
        match c.method {
            ConsolidationMethod::LlmConsolidator => stats.llm_consolidator += 1,
            ConsolidationMethod::MajorityVote => stats.majority_vote += 1,
            ConsolidationMethod::Unresolved => stats.unresolved += 1,
        }
    }
    store.snapshot(run)?;
    Ok(stats)
}

fn fallback(labels: &[HateLabel]) -> Consolidated {
    match majority_vote(labels) {
        Some(label) => Consolidated { label: Some(label), method: ConsolidationMethod::MajorityVote },
        None => Consolidated { label: None, method: ConsolidationMethod::Unresolved },
    }
}
