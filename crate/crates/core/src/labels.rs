//! Hatefulness label taxonomy.
//!
//! A label is a coarse decision (hateful / not hateful) with an optional
//! fine-grained category. Fine categories are split into two disjoint
//! families and every fine category belongs to exactly one coarse label.
//! The two "other" categories are kept as distinct tokens so a fine label
//! alone always determines its family.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LabelError {
    #[error("unknown coarse label `{0}`")]
    UnknownCoarse(String),
    #[error("unknown fine-grained label `{0}`")]
    UnknownFine(String),
    #[error("fine label `{fine}` belongs to `{family}`, not `{coarse}`")]
    BranchMismatch { coarse: CoarseLabel, fine: FineLabel, family: CoarseLabel },
}

/// Lowercases a token and folds spaces and hyphens into underscores.
pub fn normalize_token(raw: &str) -> String {
    raw.trim()
        .chars()
        .map(|c| match c {
            ' ' | '-' => '_',
            c => c.to_ascii_lowercase(),
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoarseLabel {
    Hateful,
    NotHateful,
}

impl CoarseLabel {
    pub const ALL: [CoarseLabel; 2] = [CoarseLabel::Hateful, CoarseLabel::NotHateful];

    pub fn as_str(self) -> &'static str {
        match self {
            CoarseLabel::Hateful => "hateful",
            CoarseLabel::NotHateful => "not_hateful",
        }
    }

    /// Display name used in rendered tables.
    pub fn title(self) -> &'static str {
        match self {
            CoarseLabel::Hateful => "Hateful",
            CoarseLabel::NotHateful => "Not-Hateful",
        }
    }

    /// Fine categories admissible under this coarse label.
    pub fn family(self) -> &'static [FineLabel] {
        match self {
            CoarseLabel::Hateful => &FineLabel::HATEFUL,
            CoarseLabel::NotHateful => &FineLabel::NOT_HATEFUL,
        }
    }

    pub fn definition(self) -> &'static str {
        match self {
            CoarseLabel::Hateful => {
                "A direct or indirect attack on people based on characteristics, including \
                 ethnicity, race, nationality, immigration status, religion, caste, sex, gender \
                 identity, sexual orientation, and disability or disease. We define attack as \
                 violent or dehumanizing (comparing people to non-human things, e.g., animals) \
                 speech, statements of inferiority, and calls for exclusion or segregation. \
                 Mocking hate crime is also considered hate speech. Attacking groups \
                 perpetuating hate (e.g. terrorist groups) is not considered hate."
            }
            CoarseLabel::NotHateful => {
                "The content is humorous, neutral, or positive, without targeting or harming \
                 specific individuals or groups. It is light-hearted and intended for \
                 entertainment without being offensive. Additionally, the content does not \
                 promote or incite violence, hatred, or discrimination."
            }
        }
    }
}

impl fmt::Display for CoarseLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CoarseLabel {
    type Err = LabelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match normalize_token(s).as_str() {
            "hateful" | "hate" => Ok(CoarseLabel::Hateful),
            "not_hateful" | "nothateful" | "non_hateful" | "not_hate" => Ok(CoarseLabel::NotHateful),
            _ => Err(LabelError::UnknownCoarse(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FineLabel {
    Dehumanizing,
    Inferiority,
    IncitingViolence,
    Mocking,
    Contempt,
    Slurs,
    Exclusion,
    OtherHateful,
    Humor,
    Sarcasm,
    OtherNotHateful,
}

impl FineLabel {
    pub const HATEFUL: [FineLabel; 8] = [
        FineLabel::Dehumanizing,
        FineLabel::Inferiority,
        FineLabel::IncitingViolence,
        FineLabel::Mocking,
        FineLabel::Contempt,
        FineLabel::Slurs,
        FineLabel::Exclusion,
        FineLabel::OtherHateful,
    ];

    pub const NOT_HATEFUL: [FineLabel; 3] = [FineLabel::Humor, FineLabel::Sarcasm, FineLabel::OtherNotHateful];

    pub const ALL: [FineLabel; 11] = [
        FineLabel::Dehumanizing,
        FineLabel::Inferiority,
        FineLabel::IncitingViolence,
        FineLabel::Mocking,
        FineLabel::Contempt,
        FineLabel::Slurs,
        FineLabel::Exclusion,
        FineLabel::OtherHateful,
        FineLabel::Humor,
        FineLabel::Sarcasm,
        FineLabel::OtherNotHateful,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            FineLabel::Dehumanizing => "dehumanizing",
            FineLabel::Inferiority => "inferiority",
            FineLabel::IncitingViolence => "inciting_violence",
            FineLabel::Mocking => "mocking",
            FineLabel::Contempt => "contempt",
            FineLabel::Slurs => "slurs",
            FineLabel::Exclusion => "exclusion",
            FineLabel::OtherHateful => "other_hateful",
            FineLabel::Humor => "humor",
            FineLabel::Sarcasm => "sarcasm",
            FineLabel::OtherNotHateful => "other_not_hateful",
        }
    }

    pub fn title(self) -> &'static str {
        match self {
            FineLabel::Dehumanizing => "Dehumanizing",
            FineLabel::Inferiority => "Inferiority",
            FineLabel::IncitingViolence => "Inciting violence",
            FineLabel::Mocking => "Mocking",
            FineLabel::Contempt => "Contempt",
            FineLabel::Slurs => "Slurs",
            FineLabel::Exclusion => "Exclusion",
            FineLabel::OtherHateful | FineLabel::OtherNotHateful => "Other",
            FineLabel::Humor => "Humor",
            FineLabel::Sarcasm => "Sarcasm",
        }
    }

    pub fn family(self) -> CoarseLabel {
        match self {
            FineLabel::Humor | FineLabel::Sarcasm | FineLabel::OtherNotHateful => CoarseLabel::NotHateful,
            _ => CoarseLabel::Hateful,
        }
    }

    pub fn definition(self) -> &'static str {
        match self {
            FineLabel::Dehumanizing => "Explicitly or implicitly describing or presenting a group as subhuman.",
            FineLabel::Inferiority => {
                "Claiming that a group is inferior, less worthy or less important than either \
                 society in general or another group"
            }
            FineLabel::IncitingViolence => {
                "Explicitly or implicitly calling for harm to be inflicted on a group, \
                 including physical attacks"
            }
            FineLabel::Mocking => "Making jokes about, undermining, belittling, or disparaging a group",
            FineLabel::Contempt => "Expressing intensely negative feelings or emotions about a group",
            FineLabel::Slurs => "Using prejudicial terms to refer to, describe or characterize a group",
            FineLabel::Exclusion => {
                "Advocating, planning or justifying the exclusion or segregation of a group from \
                 all of society or certain parts"
            }
            FineLabel::OtherHateful | FineLabel::OtherNotHateful => "None of the above",
            FineLabel::Humor => {
                "The purpose of humor is to entertain, amuse, or bring joy to the audience. \
                 Often characterized by jokes, puns, or playful language. Humor can vary widely \
                 in style, including wit, slapstick, parody, and satire."
            }
            FineLabel::Sarcasm => {
                "Typically involves saying the opposite of what one means. Sarcasm is a form of \
                 irony that always occurs with a deliberate mismatch between what is said and \
                 what is meant, intentionally to ridicule or mock a specific target."
            }
        }
    }

    /// Resolves a fine token, using `coarse` to pick the right "other".
    pub fn parse_in(raw: &str, coarse: CoarseLabel) -> Result<FineLabel, LabelError> {
        let token = normalize_token(raw);
        if token == "other" || token == "none_of_the_above" {
            return Ok(match coarse {
                CoarseLabel::Hateful => FineLabel::OtherHateful,
                CoarseLabel::NotHateful => FineLabel::OtherNotHateful,
            });
        }
        token.parse()
    }
}

impl fmt::Display for FineLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FineLabel {
    type Err = LabelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let token = normalize_token(s);
        let token = match token.as_str() {
            "humour" => "humor",
            "sarcastic" => "sarcasm",
            "incitement" | "incitement_to_violence" => "inciting_violence",
            "dehumanising" => "dehumanizing",
            "slur" => "slurs",
            "other_not_hate" | "other_non_hateful" => "other_not_hateful",
            "other_hate" => "other_hateful",
            t => t,
        };
        FineLabel::ALL.into_iter().find(|f| f.as_str() == token).ok_or_else(|| LabelError::UnknownFine(s.to_string()))
    }
}

/// A coarse label plus optional fine category from the same family.
///
/// Construction goes through [`HateLabel::new`], so a value of this type
/// is always branch consistent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct HateLabel {
    coarse: CoarseLabel,
    #[serde(skip_serializing_if = "Option::is_none")]
    fine: Option<FineLabel>,
}

impl HateLabel {
    pub fn new(coarse: CoarseLabel, fine: Option<FineLabel>) -> Result<Self, LabelError> {
        if let Some(fine) = fine {
            if fine.family() != coarse {
                return Err(LabelError::BranchMismatch { coarse, fine, family: fine.family() });
            }
        }
        Ok(HateLabel { coarse, fine })
    }

    pub fn coarse_only(coarse: CoarseLabel) -> Self {
        HateLabel { coarse, fine: None }
    }

    /// Label implied by a fine category.
    pub fn from_fine(fine: FineLabel) -> Self {
        HateLabel { coarse: fine.family(), fine: Some(fine) }
    }

    /// Parses a pair of raw tokens, resolving "other" against the coarse value.
    pub fn parse(coarse: &str, fine: Option<&str>) -> Result<Self, LabelError> {
        let coarse: CoarseLabel = coarse.parse()?;
        let fine = match fine.map(str::trim) {
            None | Some("") => None,
            Some(raw) => Some(FineLabel::parse_in(raw, coarse)?),
        };
        HateLabel::new(coarse, fine)
    }

    pub fn coarse(&self) -> CoarseLabel {
        self.coarse
    }

    pub fn fine(&self) -> Option<FineLabel> {
        self.fine
    }

    /// Canonical JSON answer, as agents are asked to produce it.
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("label serializes")
    }
}

impl fmt::Display for HateLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.fine {
            Some(fine) => write!(f, "{}/{}", self.coarse, fine),
            None => write!(f, "{}", self.coarse),
        }
    }
}

impl<'de> Deserialize<'de> for HateLabel {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            coarse: String,
            #[serde(default)]
            fine: Option<String>,
        }
        let raw = Raw::deserialize(deserializer)?;
        HateLabel::parse(&raw.coarse, raw.fine.as_deref()).map_err(serde::de::Error::custom)
    }
}

/// True when a set of labels contains two distinct coarse values or two
/// distinct fine values (labels without a fine category do not count
/// toward the fine comparison).
pub fn labels_disagree<'a>(labels: impl IntoIterator<Item = &'a HateLabel>) -> bool {
    let mut coarse: Option<CoarseLabel> = None;
    let mut fine: Option<FineLabel> = None;
    for label in labels {
        match coarse {
            Some(c) if c != label.coarse => return true,
            _ => coarse = Some(label.coarse),
        }
        if let Some(f) = label.fine {
            match fine {
                Some(seen) if seen != f => return true,
                _ => fine = Some(f),
            }
        }
    }
    false
}
