//! Label consolidation rules that do not involve an agent.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::labels::{labels_disagree, CoarseLabel, HateLabel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConsolidationMethod {
    LlmConsolidator,
    MajorityVote,
    Unresolved,
}

impl ConsolidationMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            ConsolidationMethod::LlmConsolidator => "llm_consolidator",
            ConsolidationMethod::MajorityVote => "majority_vote",
            ConsolidationMethod::Unresolved => "unresolved",
        }
    }
}

/// The shared label when `labels` is non-empty and free of disagreement.
/// A fine category given by any respondent is kept.
pub fn unanimous(labels: &[HateLabel]) -> Option<HateLabel> {
    let first = labels.first()?;
    if labels_disagree(labels) {
        return None;
    }
    let fine = labels.iter().find_map(|l| l.fine());
    Some(HateLabel::new(first.coarse(), fine).expect("agreeing labels share a family"))
}

/// Majority vote on the coarse label; the fine category is the mode among
/// the majority's respondents. A coarse tie yields `None`; a fine tie
/// keeps the coarse label without a fine category.
pub fn majority_vote(labels: &[HateLabel]) -> Option<HateLabel> {
    let count = |c: CoarseLabel| labels.iter().filter(|l| l.coarse() == c).count();
    let hateful = count(CoarseLabel::Hateful);
    let not_hateful = count(CoarseLabel::NotHateful);
    let coarse = match hateful.cmp(&not_hateful) {
        std::cmp::Ordering::Greater => CoarseLabel::Hateful,
        std::cmp::Ordering::Less => CoarseLabel::NotHateful,
        std::cmp::Ordering::Equal => return None,
    };
    let mut fine_votes = BTreeMap::new();
    for fine in labels.iter().filter(|l| l.coarse() == coarse).filter_map(|l| l.fine()) {
        *fine_votes.entry(fine).or_insert(0usize) += 1;
    }
    let top = fine_votes.values().copied().max().unwrap_or(0);
    let mut leaders = fine_votes.iter().filter(|(_, &n)| n == top).map(|(&f, _)| f);
    let fine = match (leaders.next(), leaders.next()) {
        (Some(f), None) => Some(f),
        _ => None,
    };
    Some(HateLabel::new(coarse, fine).expect("fine taken from majority family"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::labels::FineLabel;

    fn h(f: FineLabel) -> HateLabel {
        HateLabel::from_fine(f)
    }

    #[test]
    fn unanimity() {
        let m = h(FineLabel::Mocking);
        assert_eq!(unanimous(&[m, m, m]), Some(m));
        let coarse = HateLabel::coarse_only(CoarseLabel::Hateful);
        assert_eq!(unanimous(&[coarse, m]), Some(m));
        assert_eq!(unanimous(&[m, h(FineLabel::Slurs)]), None);
        assert_eq!(unanimous(&[]), None);
    }

    #[test]
    fn majority_examples() {
        let m = h(FineLabel::Mocking);
        let s = h(FineLabel::Slurs);
        let humor = h(FineLabel::Humor);
        assert_eq!(majority_vote(&[m, m, humor]), Some(m));
        assert_eq!(majority_vote(&[m, s, humor]), Some(HateLabel::coarse_only(CoarseLabel::Hateful)));
        assert_eq!(majority_vote(&[m, s, s]), Some(s));
        assert_eq!(majority_vote(&[m, humor]), None);
        assert_eq!(majority_vote(&[]), None);
    }

    /// Every pattern of two successful responses, enumerated by hand:
    /// equal coarse → that coarse (fine kept only if the two fines do not
    /// tie), different coarse → unresolved.
    #[test]
    fn two_response_patterns() {
        let h_ = HateLabel::coarse_only(CoarseLabel::Hateful);
        let n_ = HateLabel::coarse_only(CoarseLabel::NotHateful);
        let hm = h(FineLabel::Mocking);
        let hs = h(FineLabel::Slurs);
        let nh = h(FineLabel::Humor);
        let cases = [
            ([h_, h_], Some(h_)),
            ([h_, hm], Some(hm)),
            ([hm, hm], Some(hm)),
            ([hm, hs], Some(h_)),
            ([n_, n_], Some(n_)),
            ([nh, n_], Some(nh)),
            ([h_, n_], None),
            ([hm, nh], None),
            ([hm, n_], None),
            ([h_, nh], None),
        ];
        for (pair, expected) in cases {
            assert_eq!(majority_vote(&pair), expected, "{pair:?}");
            let mut reversed = pair;
            reversed.reverse();
            assert_eq!(majority_vote(&reversed), expected, "{reversed:?}");
        }
    }
}
