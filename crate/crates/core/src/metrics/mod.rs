//! Agreement statistics and classification scoring.
//!
//! All metrics work on [`LabelVector`]s: id-keyed class assignments over a
//! declared alphabet. Pairs of vectors are aligned by id, never by
//! position.

mod agreement;
mod eval;

use std::collections::{HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use agreement::{
    agreement_matrix, cohen_detail, cohen_kappa, fleiss_from_vectors, fleiss_kappa, AgreementOptions, AgreementReport,
    CohenDetail, MultiRaterAgreement, PairAgreement, PairGroup,
};
pub use eval::{evaluate, ClassScore, EvalReport};

use crate::dataset::LabelRecord;
use crate::labels::{CoarseLabel, FineLabel};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricError {
    #[error("the two label vectors share no ids")]
    EmptyIntersection,
    #[error("degenerate marginals: expected agreement is 1 but observed agreement is {observed}")]
    Degenerate { observed: f64 },
    #[error("label vectors use different class alphabets")]
    AlphabetMismatch,
    #[error("item `{id}` has class `{token}` outside the declared alphabet")]
    UnknownClass { id: String, token: String },
    #[error("duplicate id `{0}` in label vector")]
    DuplicateId(String),
    #[error("{} gold items have no prediction: {}", .0.len(), preview(.0))]
    MissingPredictions(Vec<String>),
    #[error("{0}")]
    Argument(String),
}

fn preview(ids: &[String]) -> String {
    const SHOWN: usize = 10;
    let mut out = ids.iter().take(SHOWN).cloned().collect::<Vec<_>>().join(", ");
    if ids.len() > SHOWN {
        out.push_str(&format!(", ... ({} more)", ids.len() - SHOWN));
    }
    out
}

/// Which part of a label a vector is built from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum LabelLevel {
    /// hateful / not_hateful.
    #[default]
    Coarse,
    /// All 11 fine categories.
    Fine,
    /// Fine categories of hateful items only.
    HatefulFine,
    /// Fine categories of not-hateful items only.
    NotHatefulFine,
}

impl LabelLevel {
    pub fn alphabet(self) -> Vec<String> {
        let tokens: Vec<&str> = match self {
            LabelLevel::Coarse => CoarseLabel::ALL.iter().map(|c| c.as_str()).collect(),
            LabelLevel::Fine => FineLabel::ALL.iter().map(|f| f.as_str()).collect(),
            LabelLevel::HatefulFine => FineLabel::HATEFUL.iter().map(|f| f.as_str()).collect(),
            LabelLevel::NotHatefulFine => FineLabel::NOT_HATEFUL.iter().map(|f| f.as_str()).collect(),
        };
        tokens.into_iter().map(String::from).collect()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            LabelLevel::Coarse => "coarse",
            LabelLevel::Fine => "fine",
            LabelLevel::HatefulFine => "hateful-fine",
            LabelLevel::NotHatefulFine => "not-hateful-fine",
        }
    }
}

impl fmt::Display for LabelLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for LabelLevel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "coarse" => Ok(LabelLevel::Coarse),
            "fine" => Ok(LabelLevel::Fine),
            "hateful-fine" => Ok(LabelLevel::HatefulFine),
            "not-hateful-fine" => Ok(LabelLevel::NotHatefulFine),
            other => Err(format!("unknown label level `{other}`")),
        }
    }
}

/// Id-keyed class assignments over a fixed alphabet. Classes are stored
/// as alphabet indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelVector {
    alphabet: Vec<String>,
    entries: Vec<(String, usize)>,
}

impl LabelVector {
    pub fn new<I, S, T>(alphabet: Vec<String>, items: I) -> Result<Self, MetricError>
    where
        I: IntoIterator<Item = (S, T)>,
        S: Into<String>,
        T: AsRef<str>,
    {
        let index: HashMap<&str, usize> = alphabet.iter().enumerate().map(|(i, t)| (t.as_str(), i)).collect();
        let mut seen = HashSet::new();
        let mut entries = Vec::new();
        for (id, token) in items {
            let id = id.into();
            let token = token.as_ref();
            let Some(&class) = index.get(token) else {
                return Err(MetricError::UnknownClass { id, token: token.to_string() });
            };
            if !seen.insert(id.clone()) {
                return Err(MetricError::DuplicateId(id));
            }
            entries.push((id, class));
        }
        Ok(LabelVector { alphabet, entries })
    }

    /// Builds a vector from label records at `level`. Records that have no
    /// value at that level (e.g. no fine label, or the wrong family) are
    /// skipped; the second element is how many were skipped.
    pub fn from_labels(records: &[LabelRecord], level: LabelLevel) -> Result<(Self, usize), MetricError> {
        let mut skipped = 0;
        let mut items = Vec::new();
        for record in records {
            let token = match level {
                LabelLevel::Coarse => Some(record.label.coarse().as_str()),
                LabelLevel::Fine => record.label.fine().map(FineLabel::as_str),
                LabelLevel::HatefulFine => {
                    record.label.fine().filter(|f| f.family() == CoarseLabel::Hateful).map(FineLabel::as_str)
                }
                LabelLevel::NotHatefulFine => {
                    record.label.fine().filter(|f| f.family() == CoarseLabel::NotHateful).map(FineLabel::as_str)
                }
            };
            match token {
                Some(token) => items.push((record.id.clone(), token)),
                None => skipped += 1,
            }
        }
        Ok((LabelVector::new(level.alphabet(), items)?, skipped))
    }

    pub fn alphabet(&self) -> &[String] {
        &self.alphabet
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// `(id, class index)` pairs in insertion order.
    pub fn entries(&self) -> &[(String, usize)] {
        &self.entries
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.entries.iter().map(|(id, c)| (id.as_str(), self.alphabet[*c].as_str()))
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|(id, _)| id.as_str())
    }

    fn index(&self) -> HashMap<&str, usize> {
        self.entries.iter().map(|(id, c)| (id.as_str(), *c)).collect()
    }
}

/// Class-index pairs for ids present in both vectors, in `a`'s order.
pub(crate) fn align(a: &LabelVector, b: &LabelVector) -> Result<Vec<(usize, usize)>, MetricError> {
    if a.alphabet != b.alphabet {
        return Err(MetricError::AlphabetMismatch);
    }
    let b_index = b.index();
    Ok(a.entries.iter().filter_map(|(id, ca)| b_index.get(id.as_str()).map(|&cb| (*ca, cb))).collect())
}
