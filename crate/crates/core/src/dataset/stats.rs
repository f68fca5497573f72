use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{DatasetError, LabelSet, MemeRecord, Propaganda, Split};
use crate::labels::{CoarseLabel, FineLabel};

/// Label counts for one split.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitDistribution {
    /// `train`, `dev`, `test` or `unassigned`.
    pub split: String,
    pub records: usize,
    pub coarse: BTreeMap<CoarseLabel, usize>,
    pub coarse_total: usize,
    pub fine_hateful: BTreeMap<FineLabel, usize>,
    pub fine_hateful_total: usize,
    pub fine_not_hateful: BTreeMap<FineLabel, usize>,
    pub fine_not_hateful_total: usize,
    /// Records without a coarse label.
    pub unlabeled: usize,
    /// Records whose fine label family differs from their coarse label
    /// (only possible when coarse and fine come from different sources).
    pub cross_source_conflicts: usize,
}

impl SplitDistribution {
    fn empty(split: &str) -> Self {
        SplitDistribution {
            split: split.to_string(),
            records: 0,
            coarse: CoarseLabel::ALL.iter().map(|&c| (c, 0)).collect(),
            coarse_total: 0,
            fine_hateful: FineLabel::HATEFUL.iter().map(|&f| (f, 0)).collect(),
            fine_hateful_total: 0,
            fine_not_hateful: FineLabel::NOT_HATEFUL.iter().map(|&f| (f, 0)).collect(),
            fine_not_hateful_total: 0,
            unlabeled: 0,
            cross_source_conflicts: 0,
        }
    }

    pub fn coarse_count(&self, label: CoarseLabel) -> usize {
        self.coarse.get(&label).copied().unwrap_or(0)
    }

    pub fn fine_count(&self, label: FineLabel) -> usize {
        self.fine_hateful.get(&label).or_else(|| self.fine_not_hateful.get(&label)).copied().unwrap_or(0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DistributionReport {
    pub splits: Vec<SplitDistribution>,
    pub warnings: Vec<String>,
}

impl DistributionReport {
    pub fn split(&self, name: &str) -> Option<&SplitDistribution> {
        self.splits.iter().find(|s| s.split == name)
    }
}

/// Counts coarse labels from `coarse` and fine labels from `fine` per
/// split. Pass the same set twice when both levels come from one source.
pub fn distribution(records: &[MemeRecord], coarse: &LabelSet, fine: &LabelSet) -> DistributionReport {
    let mut splits: Vec<SplitDistribution> = Split::ALL.iter().map(|s| SplitDistribution::empty(s.as_str())).collect();
    let mut unassigned = SplitDistribution::empty("unassigned");

    for record in records {
        let bucket = match record.split {
            Some(split) => &mut splits[split as usize],
            None => &mut unassigned,
        };
        bucket.records += 1;
        let coarse_label = coarse.get(&record.id).map(|l| l.coarse());
        match coarse_label {
            Some(c) => {
                *bucket.coarse.entry(c).or_default() += 1;
                bucket.coarse_total += 1;
            }
            None => bucket.unlabeled += 1,
        }
        if let Some(f) = fine.get(&record.id).and_then(|l| l.fine()) {
            match f.family() {
                CoarseLabel::Hateful => {
                    *bucket.fine_hateful.entry(f).or_default() += 1;
                    bucket.fine_hateful_total += 1;
                }
                CoarseLabel::NotHateful => {
                    *bucket.fine_not_hateful.entry(f).or_default() += 1;
                    bucket.fine_not_hateful_total += 1;
                }
            }
            if coarse_label.is_some_and(|c| c != f.family()) {
                bucket.cross_source_conflicts += 1;
            }
        }
    }
    if unassigned.records > 0 {
        splits.push(unassigned);
    }
    let warnings = splits.iter().flat_map(split_warnings).collect();
    DistributionReport { splits, warnings }
}

fn split_warnings(s: &SplitDistribution) -> Vec<String> {
    let mut out = Vec::new();
    if s.unlabeled > 0 {
        out.push(format!("{}: {} records carry no coarse label", s.split, s.unlabeled));
    }
    if s.fine_hateful_total + s.fine_not_hateful_total > 0 {
        let pairs = [(CoarseLabel::Hateful, s.fine_hateful_total), (CoarseLabel::NotHateful, s.fine_not_hateful_total)];
        for (label, fine_total) in pairs {
            let coarse_count = s.coarse_count(label);
            if coarse_count != fine_total {
                out.push(format!(
                    "{}: coarse {} count {} differs from fine-grained {} total {}",
                    s.split, label, coarse_count, label, fine_total
                ));
            }
        }
    }
    if s.cross_source_conflicts > 0 {
        out.push(format!(
            "{}: {} records have a fine-grained label outside their coarse label's family",
            s.split, s.cross_source_conflicts
        ));
    }
    out
}

/// Propaganda × coarse-hate contingency table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossTab {
    pub split: Option<Split>,
    pub propagandistic_hateful: usize,
    pub propagandistic_not_hateful: usize,
    pub not_propagandistic_hateful: usize,
    pub not_propagandistic_not_hateful: usize,
    pub propagandistic_total: usize,
    pub not_propagandistic_total: usize,
    pub hateful_total: usize,
    pub not_hateful_total: usize,
    pub total: usize,
    /// Selected records skipped for lacking a coarse label.
    pub unlabeled: usize,
    /// Hateful share of propagandistic memes; `None` when there are none.
    pub hateful_share_of_propagandistic: Option<f64>,
}

pub fn crosstab(records: &[MemeRecord], labels: &LabelSet, split: Option<Split>) -> CrossTab {
    let mut cells = [[0usize; 2]; 2];
    let mut unlabeled = 0;
    for record in records.iter().filter(|r| split.is_none() || r.split == split) {
        let Some(label) = labels.get(&record.id) else {
            unlabeled += 1;
            continue;
        };
        let row = match record.propaganda {
            Propaganda::Propagandistic => 0,
            Propaganda::NotPropagandistic => 1,
        };
        let col = match label.coarse() {
            CoarseLabel::Hateful => 0,
            CoarseLabel::NotHateful => 1,
        };
        cells[row][col] += 1;
    }
    let propagandistic_total = cells[0][0] + cells[0][1];
    CrossTab {
        split,
        propagandistic_hateful: cells[0][0],
        propagandistic_not_hateful: cells[0][1],
        not_propagandistic_hateful: cells[1][0],
        not_propagandistic_not_hateful: cells[1][1],
        propagandistic_total,
        not_propagandistic_total: cells[1][0] + cells[1][1],
        hateful_total: cells[0][0] + cells[1][0],
        not_hateful_total: cells[0][1] + cells[1][1],
        total: cells.iter().flatten().sum(),
        unlabeled,
        hateful_share_of_propagandistic: (propagandistic_total > 0)
            .then(|| cells[0][0] as f64 / propagandistic_total as f64),
    }
}

/// Inverse-frequency class weights, `N / (K * N_c)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassWeights {
    pub counts: BTreeMap<String, usize>,
    pub weights: BTreeMap<String, f64>,
}

impl ClassWeights {
    pub fn weight(&self, class: &str) -> Option<f64> {
        self.weights.get(class).copied()
    }
}

pub fn class_weights(counts: &BTreeMap<String, usize>) -> Result<ClassWeights, DatasetError> {
    if counts.is_empty() {
        return Err(DatasetError::Argument("class weights need at least one class".into()));
    }
    if let Some((class, _)) = counts.iter().find(|(_, &n)| n == 0) {
        return Err(DatasetError::Argument(format!("class `{class}` has zero examples")));
    }
    let total: usize = counts.values().sum();
    let k = counts.len() as f64;
    let weights = counts.iter().map(|(class, &n)| (class.clone(), total as f64 / (k * n as f64))).collect();
    Ok(ClassWeights { counts: counts.clone(), weights })
}

/// Coarse label counts over the records of `split` (all records if `None`).
/// Both classes are always present, so a missing class shows up as zero.
pub fn coarse_counts(records: &[MemeRecord], labels: &LabelSet, split: Option<Split>) -> BTreeMap<String, usize> {
    let mut counts: BTreeMap<String, usize> = CoarseLabel::ALL.iter().map(|c| (c.as_str().to_string(), 0)).collect();
    for record in records.iter().filter(|r| split.is_none() || r.split == split) {
        if let Some(label) = labels.get(&record.id) {
            *counts.entry(label.coarse().as_str().to_string()).or_default() += 1;
        }
    }
    counts
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::labels::HateLabel;
    use proptest::prelude::*;

    fn record(id: usize, propaganda: Propaganda, split: Option<Split>) -> MemeRecord {
        MemeRecord { id: format!("m{id}"), image_path: format!("{id}.png"), text: String::new(), propaganda, split }
    }

    fn counts(pairs: &[(&str, usize)]) -> BTreeMap<String, usize> {
        pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    #[test]
    fn class_weight_examples() {
        let w = class_weights(&counts(&[("hateful", 212), ("not_hateful", 1931)])).unwrap();
        // 2143 / (2 * 212) and 2143 / (2 * 1931)
        assert!((w.weight("hateful").unwrap() - 5.054_245_283).abs() < 1e-6);
        assert!((w.weight("not_hateful").unwrap() - 0.554_893_837).abs() < 1e-6);

        let w = class_weights(&counts(&[("a", 10), ("b", 10)])).unwrap();
        assert_eq!(w.weight("a"), Some(1.0));
        assert_eq!(w.weight("b"), Some(1.0));

        let w = class_weights(&counts(&[("a", 1), ("b", 1), ("c", 2)])).unwrap();
        assert!((w.weight("a").unwrap() - 4.0 / 3.0).abs() < 1e-12);
        assert!((w.weight("c").unwrap() - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn zero_count_names_class() {
        let err = class_weights(&counts(&[("a", 3), ("slurs", 0)])).unwrap_err();
        assert!(err.to_string().contains("slurs"));
    }

    #[test]
    fn crosstab_share() {
        let records: Vec<_> = (0..4).map(|i| record(i, Propaganda::Propagandistic, Some(Split::Test))).collect();
        let labels: LabelSet =
            records.iter().map(|r| (r.id.clone(), HateLabel::coarse_only(CoarseLabel::Hateful))).collect();
        let tab = crosstab(&records, &labels, Some(Split::Test));
        assert_eq!(tab.hateful_share_of_propagandistic, Some(1.0));

        let records: Vec<_> = (0..4).map(|i| record(i, Propaganda::NotPropagandistic, Some(Split::Test))).collect();
        let tab = crosstab(&records, &labels, None);
        assert_eq!(tab.hateful_share_of_propagandistic, None);
        assert_eq!(tab.total, 4);
        let json = serde_json::to_string(&tab).unwrap();
        assert!(json.contains("\"hateful_share_of_propagandistic\":null"));
    }

    #[test]
    fn empty_distribution_is_all_zero() {
        let report = distribution(&[], &LabelSet::default(), &LabelSet::default());
        assert_eq!(report.splits.len(), 3);
        assert!(report.warnings.is_empty());
        for split in &report.splits {
            assert_eq!(split.records, 0);
            assert!(split.coarse.values().all(|&n| n == 0));
        }
    }

    #[test]
    fn unlabeled_and_mismatch_warnings() {
        let records: Vec<_> = (0..3).map(|i| record(i, Propaganda::Propagandistic, Some(Split::Dev))).collect();
        let mut coarse = LabelSet::default();
        coarse.insert("m0", HateLabel::coarse_only(CoarseLabel::NotHateful));
        coarse.insert("m1", HateLabel::coarse_only(CoarseLabel::NotHateful));
        let mut fine = LabelSet::default();
        fine.insert("m0", HateLabel::from_fine(FineLabel::Mocking));
        fine.insert("m1", HateLabel::from_fine(FineLabel::Humor));
        let report = distribution(&records, &coarse, &fine);
        let dev = report.split("dev").unwrap();
        assert_eq!(dev.unlabeled, 1);
        assert_eq!(dev.cross_source_conflicts, 1);
        assert_eq!(report.warnings.len(), 4, "{:?}", report.warnings);
    }

    proptest! {
        #[test]
        fn weight_identity(values in proptest::collection::vec(1usize..100_000, 1..12)) {
            let map: BTreeMap<String, usize> =
                values.iter().enumerate().map(|(i, &n)| (format!("c{i}"), n)).collect();
            let w = class_weights(&map).unwrap();
            let total: usize = values.iter().sum();
            let weighted: f64 = map.iter().map(|(k, &n)| w.weights[k] * n as f64).sum();
            prop_assert!((weighted - total as f64).abs() <= 1e-9 * total as f64);
            prop_assert!(w.weights.values().all(|&x| x > 0.0));
        }

        #[test]
        fn coarse_counts_conserved(labels in proptest::collection::vec((0u8..3, 0u8..4), 0..300)) {
            let splits = [Some(Split::Train), Some(Split::Dev), Some(Split::Test), None];
            let records: Vec<_> = labels
                .iter()
                .enumerate()
                .map(|(i, &(_, s))| record(i, Propaganda::Propagandistic, splits[s as usize]))
                .collect();
            let set: LabelSet = labels
                .iter()
                .enumerate()
                .filter(|(_, &(l, _))| l < 2)
                .map(|(i, &(l, _))| (format!("m{i}"), HateLabel::coarse_only(CoarseLabel::ALL[l as usize])))
                .collect();
            let report = distribution(&records, &set, &set);
            for split in &report.splits {
                prop_assert_eq!(split.coarse.values().sum::<usize>(), split.coarse_total);
                prop_assert_eq!(split.coarse_total + split.unlabeled, split.records);
            }
        }
    }
}
