//! Prompt templates and agent answer parsing.
//!
//! Templates use `{{name}}` placeholders. Three names exist:
//! `meme_text`, `image` and `candidate_labels`; the last one is required
//! in consolidation templates and forbidden in annotation templates.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::MemeRecord;
use crate::labels::{HateLabel, LabelError};

pub const ANNOTATION_TEMPLATE_ID: &str = "annotation-v1";
pub const CONSOLIDATION_TEMPLATE_ID: &str = "consolidation-v1";

const ANNOTATION_BODY: &str = include_str!("../prompts/annotation.txt");
const CONSOLIDATION_BODY: &str = include_str!("../prompts/consolidation.txt");

const PLACEHOLDERS: [&str; 3] = ["meme_text", "image", "candidate_labels"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Annotation,
    Consolidation,
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Phase::Annotation => "annotation",
            Phase::Consolidation => "consolidation",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PromptError {
    #[error("template `{id}`: {message}")]
    Template { id: String, message: String },
    #[error("{0}")]
    Argument(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptTemplate {
    pub id: String,
    pub phase: Phase,
    pub body: String,
}

impl PromptTemplate {
    /// Builds a template and checks its placeholders.
    pub fn new(id: impl Into<String>, phase: Phase, body: impl Into<String>) -> Result<Self, PromptError> {
        let template = PromptTemplate { id: id.into(), phase, body: body.into() };
        template.validate()?;
        Ok(template)
    }

    pub fn canonical_annotation() -> Self {
        PromptTemplate { id: ANNOTATION_TEMPLATE_ID.into(), phase: Phase::Annotation, body: ANNOTATION_BODY.into() }
    }

    pub fn canonical_consolidation() -> Self {
        PromptTemplate {
            id: CONSOLIDATION_TEMPLATE_ID.into(),
            phase: Phase::Consolidation,
            body: CONSOLIDATION_BODY.into(),
        }
    }

    /// Built-in template by id.
    pub fn builtin(id: &str) -> Option<Self> {
        match id {
            ANNOTATION_TEMPLATE_ID => Some(Self::canonical_annotation()),
            CONSOLIDATION_TEMPLATE_ID => Some(Self::canonical_consolidation()),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<(), PromptError> {
        let names = placeholders(&self.body).map_err(|message| self.error(message))?;
        if let Some(unknown) = names.iter().find(|n| !PLACEHOLDERS.contains(&n.as_str())) {
            return Err(self.error(format!("unknown placeholder {{{{{unknown}}}}}")));
        }
        let has_candidates = names.iter().any(|n| n == "candidate_labels");
        match (self.phase, has_candidates) {
            (Phase::Annotation, true) => {
                Err(self.error("annotation templates must not reference {{candidate_labels}}".into()))
            }
            (Phase::Consolidation, false) => {
                Err(self.error("consolidation templates must reference {{candidate_labels}}".into()))
            }
            _ => Ok(()),
        }
    }

    fn error(&self, message: String) -> PromptError {
        PromptError::Template { id: self.id.clone(), message }
    }
}

/// Placeholder names in order of appearance.
fn placeholders(body: &str) -> Result<Vec<String>, String> {
    let mut names = Vec::new();
    let mut rest = body;
    while let Some(start) = rest.find("{{") {
        let after = &rest[start + 2..];
        let end = after.find("}}").ok_or_else(|| "unterminated placeholder".to_string())?;
        names.push(after[..end].trim().to_string());
        rest = &after[end + 2..];
    }
    Ok(names)
}

/// An annotator label offered to the consolidator.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Candidate {
    pub source: String,
    pub label: HateLabel,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RenderedPrompt {
    pub template_id: String,
    pub phase: Phase,
    pub text: String,
    /// Image path relative to the manifest root; the bytes are attached by
    /// the caller.
    pub image_path: String,
}

pub fn render_candidates(candidates: &[Candidate]) -> String {
    candidates
        .iter()
        .enumerate()
        .map(|(i, c)| format!("{}. {}: {}", i + 1, c.source, c.label.to_json()))
        .collect::<Vec<_>>()
        .join("\n")
}

/// Substitutes every placeholder. Output depends only on the arguments.
pub fn render_prompt(
    template: &PromptTemplate,
    meme: &MemeRecord,
    candidates: Option<&[Candidate]>,
) -> Result<RenderedPrompt, PromptError> {
    template.validate()?;
    let candidate_text = match (template.phase, candidates) {
        (Phase::Annotation, Some(_)) => {
            return Err(PromptError::Argument("annotation prompts do not take candidate labels".into()))
        }
        (Phase::Consolidation, None) => {
            return Err(PromptError::Argument("consolidation prompts need candidate labels".into()))
        }
        (Phase::Consolidation, Some([])) => {
            return Err(PromptError::Argument("consolidation prompts need at least one candidate label".into()))
        }
        (Phase::Consolidation, Some(c)) => Some(render_candidates(c)),
        (Phase::Annotation, None) => None,
    };

    let mut text = String::with_capacity(template.body.len() + meme.text.len());
    let mut rest = template.body.as_str();
    while let Some(start) = rest.find("{{") {
        text.push_str(&rest[..start]);
        let after = &rest[start + 2..];
        let end = after.find("}}").expect("validated");
        match after[..end].trim() {
            "meme_text" => text.push_str(&meme.text),
            "image" => text.push_str(&format!("[attached image: {}]", meme.image_path)),
            "candidate_labels" => text.push_str(candidate_text.as_deref().unwrap_or_default()),
            _ => unreachable!("validated"),
        }
        rest = &after[end + 2..];
    }
    text.push_str(rest);
    Ok(RenderedPrompt {
        template_id: template.id.clone(),
        phase: template.phase,
        text,
        image_path: meme.image_path.clone(),
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("{phase} answer contains no JSON object with a `coarse` field")]
    NoObject { phase: Phase },
    #[error("{phase} answer has a non-string `{field}` field")]
    FieldType { phase: Phase, field: &'static str },
    #[error("{phase} answer: {source}")]
    Label {
        phase: Phase,
        #[source]
        source: LabelError,
    },
}

/// Extracts the label from a free-form agent answer: the first well-formed
/// JSON object carrying a `coarse` field wins. Surrounding prose and
/// markdown fences are ignored.
pub fn parse_response(raw: &str, phase: Phase) -> Result<HateLabel, ParseError> {
    for (pos, _) in raw.match_indices('{') {
        let mut stream = serde_json::Deserializer::from_str(&raw[pos..]).into_iter::<serde_json::Value>();
        let Some(Ok(serde_json::Value::Object(map))) = stream.next() else {
            continue;
        };
        let Some(coarse) = map.get("coarse") else {
            continue;
        };
        let coarse = coarse.as_str().ok_or(ParseError::FieldType { phase, field: "coarse" })?;
        let fine = match map.get("fine") {
            None | Some(serde_json::Value::Null) => None,
            Some(serde_json::Value::String(s)) => Some(s.as_str()),
            Some(_) => return Err(ParseError::FieldType { phase, field: "fine" }),
        };
        return HateLabel::parse(coarse, fine).map_err(|source| ParseError::Label { phase, source });
    }
    Err(ParseError::NoObject { phase })
}
