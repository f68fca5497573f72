use memelabel_core::annotation::{AnnotationRun, ResponseStatus, RunPaths};
use memelabel_core::consolidation::ConsolidationMethod;
use memelabel_core::dataset::{render_labels, write_atomic, LabelRecord};
use serde::{Deserialize, Serialize};

use crate::PipelineError;

pub const CONSOLIDATED_SOURCE: &str = "consolidated";

/// A meme left out of an export, with the reason.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Unresolved {
    pub id: String,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Export {
    pub source: String,
    pub labels: Vec<LabelRecord>,
    pub unresolved: Vec<Unresolved>,
}

impl Export {
    pub fn render(&self) -> String {
        render_labels(&self.labels)
    }

    pub fn render_unresolved(&self) -> String {
        self.unresolved.iter().map(|u| serde_json::to_string(u).expect("serializes") + "\n").collect()
    }
}

/// Labels from one source of a run, in the run's meme order.
/// `source` is `consolidated` or an annotator's name. Output depends only
/// on the run's labels, so repeated exports are byte-identical.
pub fn export_labels(run: &AnnotationRun, source: &str) -> Result<Export, PipelineError> {
    let mut export = Export { source: source.to_string(), ..Default::default() };
    if source == CONSOLIDATED_SOURCE {
        for id in &run.memes {
            match run.consolidated.get(id) {
                Some(c) => match c.label {
                    Some(label) => export.labels.push(LabelRecord::new(id.clone(), label, source)),
                    None => export.unresolved.push(Unresolved {
                        id: id.clone(),
                        reason: match c.method {
                            ConsolidationMethod::Unresolved if run.successful_labels(id).is_empty() => {
                                "no successful annotator label".to_string()
                            }
                            _ => "annotators split evenly and no consolidator answer".to_string(),
                        },
                    }),
                },
                None => export.unresolved.push(Unresolved { id: id.clone(), reason: "not consolidated yet".into() }),
            }
        }
        return Ok(export);
    }

    if source == "human" || source.starts_with("human:") {
        return Err(PipelineError::Argument(
            "human labels live in the review service store; export them with `--store`".into(),
        ));
    }
    if !run.annotators().any(|e| e.name == source) {
        let known: Vec<&str> =
            std::iter::once(CONSOLIDATED_SOURCE).chain(run.annotators().map(|e| e.name.as_str())).collect();
        return Err(PipelineError::Argument(format!(
            "unknown label source `{source}` (this run has: {})",
            known.join(", ")
        )));
    }
    for id in &run.memes {
        match run.response(id, source) {
            Some(r) if r.status == ResponseStatus::Ok => {
                let label = r.parsed.expect("ok responses carry a label");
                export.labels.push(LabelRecord::new(id.clone(), label, source));
            }
            Some(r) => export.unresolved.push(Unresolved {
                id: id.clone(),
                reason: match r.status {
                    ResponseStatus::ParseFailed => "answer could not be parsed".to_string(),
                    _ => format!("request failed: {}", r.error.as_deref().unwrap_or("unknown error")),
                },
            }),
            None => export.unresolved.push(Unresolved { id: id.clone(), reason: "not annotated yet".into() }),
        }
    }
    Ok(export)
}

/// One line of `failures.jsonl`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FailureRecord {
    pub meme_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub agent_name: Option<String>,
    pub phase: String,
    pub status: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attempt_count: Option<u32>,
}

pub fn failure_records(run: &AnnotationRun) -> Vec<FailureRecord> {
    let mut out: Vec<FailureRecord> = run
        .failed_responses()
        .into_iter()
        .map(|r| FailureRecord {
            meme_id: r.meme_id.clone(),
            agent_name: Some(r.agent_name.clone()),
            phase: r.phase.to_string(),
            status: serde_json::to_value(r.status).unwrap().as_str().unwrap().to_string(),
            error: r.error.clone(),
            attempt_count: Some(r.attempt_count),
        })
        .collect();
    for id in &run.memes {
        if matches!(run.consolidated.get(id), Some(c) if c.method == ConsolidationMethod::Unresolved) {
            out.push(FailureRecord {
                meme_id: id.clone(),
                agent_name: None,
                phase: "consolidation".into(),
                status: "unresolved".into(),
                error: None,
                attempt_count: None,
            });
        }
    }
    out
}

/// Writes `labels.consolidated.jsonl`, `unresolved.jsonl` and
/// `failures.jsonl` into the run directory.
pub fn write_run_outputs(run: &AnnotationRun, paths: &RunPaths) -> Result<Export, PipelineError> {
    let export = export_labels(run, CONSOLIDATED_SOURCE)?;
    write_atomic(&paths.consolidated(), export.render().as_bytes())?;
    write_atomic(&paths.unresolved(), export.render_unresolved().as_bytes())?;
    let failures: String =
        failure_records(run).iter().map(|f| serde_json::to_string(f).expect("serializes") + "\n").collect();
    write_atomic(&paths.failures(), failures.as_bytes())?;
    Ok(export)
}
