use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::{align, LabelVector, MetricError};

/// Cohen's kappa with the quantities it was computed from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CohenDetail {
    pub kappa: f64,
    pub observed: f64,
    pub expected: f64,
    pub n_items: usize,
}

/// Cohen's kappa over the id-intersection of `a` and `b`.
pub fn cohen_kappa(a: &LabelVector, b: &LabelVector) -> Result<f64, MetricError> {
    cohen_detail(a, b).map(|d| d.kappa)
}

pub fn cohen_detail(a: &LabelVector, b: &LabelVector) -> Result<CohenDetail, MetricError> {
    let pairs = align(a, b)?;
    if pairs.is_empty() {
        return Err(MetricError::EmptyIntersection);
    }
    let k = a.alphabet().len();
    let mut margin_a = vec![0u64; k];
    let mut margin_b = vec![0u64; k];
    let mut agree = 0u64;
    for &(ca, cb) in &pairs {
        margin_a[ca] += 1;
        margin_b[cb] += 1;
        agree += u64::from(ca == cb);
    }
    // kappa = (n*agree - S) / (n^2 - S) with S = sum_c a_c * b_c, in exact
    // integers so the only rounding is the final division.
    let n = pairs.len() as i128;
    let chance: i128 = margin_a.iter().zip(&margin_b).map(|(&x, &y)| i128::from(x) * i128::from(y)).sum();
    let agree = i128::from(agree);
    let observed = agree as f64 / n as f64;
    let expected = chance as f64 / (n * n) as f64;
    let kappa = if chance == n * n {
        if agree == n {
            1.0
        } else {
            return Err(MetricError::Degenerate { observed });
        }
    } else {
        (n * agree - chance) as f64 / (n * n - chance) as f64
    };
    Ok(CohenDetail { kappa, observed, expected, n_items: pairs.len() })
}

/// Fleiss' kappa from per-item category counts. Each row holds how many of
/// the `raters` raters put the item in each category.
pub fn fleiss_kappa(ratings: &[Vec<usize>], raters: usize) -> Result<f64, MetricError> {
    if raters < 2 {
        return Err(MetricError::Argument("Fleiss' kappa needs at least two raters".into()));
    }
    let Some(first) = ratings.first() else {
        return Err(MetricError::Argument("Fleiss' kappa needs at least one item".into()));
    };
    let k = first.len();
    let mut column = vec![0i128; k];
    let mut squares = 0i128;
    for (i, row) in ratings.iter().enumerate() {
        if row.len() != k {
            return Err(MetricError::Argument(format!("item {i} has {} categories, expected {k}", row.len())));
        }
        let total: usize = row.iter().sum();
        if total != raters {
            return Err(MetricError::Argument(format!("item {i} has {total} ratings, expected {raters}")));
        }
        for (c, &count) in row.iter().enumerate() {
            let count = count as i128;
            column[c] += count;
            squares += count * count;
        }
    }
    // P_bar = A / D1, P_e = S / D2, kappa = (A*D2 - S*D1) / (D1*(D2 - S)).
    let items = ratings.len() as i128;
    let r = raters as i128;
    let a = squares - items * r;
    let d1 = items * r * (r - 1);
    let s: i128 = column.iter().map(|c| c * c).sum();
    let d2 = (items * r) * (items * r);
    if s == d2 {
        return if a == d1 { Ok(1.0) } else { Err(MetricError::Degenerate { observed: a as f64 / d1 as f64 }) };
    }
    Ok((a * d2 - s * d1) as f64 / (d1 * (d2 - s)) as f64)
}

/// Fleiss' kappa over the ids shared by every vector. Returns the kappa and
/// the number of items used.
pub fn fleiss_from_vectors(vectors: &[&LabelVector]) -> Result<(f64, usize), MetricError> {
    let Some(first) = vectors.first() else {
        return Err(MetricError::Argument("no label vectors given".into()));
    };
    if vectors.iter().any(|v| v.alphabet() != first.alphabet()) {
        return Err(MetricError::AlphabetMismatch);
    }
    let indexes: Vec<_> = vectors.iter().map(|v| v.index()).collect();
    let k = first.alphabet().len();
    let ratings: Vec<Vec<usize>> = first
        .ids()
        .filter_map(|id| {
            let mut row = vec![0usize; k];
            for index in &indexes {
                row[*index.get(id)?] += 1;
            }
            Some(row)
        })
        .collect();
    if ratings.is_empty() {
        return Err(MetricError::EmptyIntersection);
    }
    let kappa = fleiss_kappa(&ratings, vectors.len())?;
    Ok((kappa, ratings.len()))
}

/// Row group in the rendered agreement table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairGroup {
    VsConsolidator,
    VsHuman,
    Pairwise,
}

impl PairGroup {
    pub fn title(self) -> &'static str {
        match self {
            PairGroup::VsConsolidator => "Agreement: annotators vs consolidator",
            PairGroup::VsHuman => "Agreement: annotators vs human",
            PairGroup::Pairwise => "Agreement: annotators (pairwise)",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairAgreement {
    pub rater_a: String,
    pub rater_b: String,
    pub group: PairGroup,
    /// `None` when the statistic is undefined for this pair.
    pub kappa: Option<f64>,
    pub n_items: usize,
    /// Items of `rater_a` / `rater_b` outside the id-intersection.
    pub dropped_a: usize,
    pub dropped_b: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiRaterAgreement {
    pub statistic: String,
    pub raters: Vec<String>,
    pub kappa: Option<f64>,
    pub n_items: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgreementReport {
    pub level: String,
    pub pairs: Vec<PairAgreement>,
    pub multi_rater: Option<MultiRaterAgreement>,
}

impl AgreementReport {
    /// True if any requested statistic came out undefined.
    pub fn degenerate(&self) -> bool {
        self.pairs.iter().any(|p| p.kappa.is_none()) || self.multi_rater.as_ref().is_some_and(|m| m.kappa.is_none())
    }

    pub fn pair(&self, a: &str, b: &str) -> Option<&PairAgreement> {
        self.pairs.iter().find(|p| (p.rater_a == a && p.rater_b == b) || (p.rater_a == b && p.rater_b == a))
    }
}

#[derive(Debug, Clone, Default)]
pub struct AgreementOptions {
    /// Label level name recorded in the report.
    pub level: String,
    /// Raters fed to the multi-rater statistic. Defaults to every vector.
    pub multi_rater: Option<Vec<String>>,
    /// Rater names treated as the consolidator / human references.
    pub consolidator_names: Vec<String>,
    pub human_names: Vec<String>,
}

impl AgreementOptions {
    pub fn new(level: impl Into<String>) -> Self {
        AgreementOptions {
            level: level.into(),
            multi_rater: None,
            consolidator_names: vec!["consolidated".into()],
            human_names: vec!["human".into()],
        }
    }

    fn is_human(&self, name: &str) -> bool {
        self.human_names.iter().any(|h| h == name) || name.starts_with("human:")
    }

    fn is_consolidator(&self, name: &str) -> bool {
        self.consolidator_names.iter().any(|c| c == name)
    }
}

/// All pairwise Cohen's kappas plus Fleiss' kappa when at least three raters
/// take part. A pair's left rater is the later one in input order, except
/// that human and consolidator references always sit on the right.
pub fn agreement_matrix(
    vectors: &[(String, LabelVector)],
    options: &AgreementOptions,
) -> Result<AgreementReport, MetricError> {
    if vectors.len() < 2 {
        return Err(MetricError::Argument("agreement needs at least two label vectors".into()));
    }
    let names: HashSet<&str> = vectors.iter().map(|(n, _)| n.as_str()).collect();
    if names.len() != vectors.len() {
        return Err(MetricError::Argument("rater names must be unique".into()));
    }
    let mut pairs = Vec::new();
    for i in 0..vectors.len() {
        for j in (i + 1)..vectors.len() {
            let (mut left, mut right) = (&vectors[j], &vectors[i]);
            let rank = |name: &str| {
                if options.is_human(name) {
                    2
                } else if options.is_consolidator(name) {
                    1
                } else {
                    0
                }
            };
            if rank(&left.0) > rank(&right.0) {
                std::mem::swap(&mut left, &mut right);
            }
            let group = match rank(&right.0) {
                2 => PairGroup::VsHuman,
                1 => PairGroup::VsConsolidator,
                _ => PairGroup::Pairwise,
            };
            let (kappa, n_items, error) = match cohen_detail(&left.1, &right.1) {
                Ok(d) => (Some(d.kappa), d.n_items, None),
                Err(MetricError::Degenerate { .. }) => {
                    let n = align(&left.1, &right.1)?.len();
                    (None, n, Some("degenerate marginals".to_string()))
                }
                Err(MetricError::EmptyIntersection) => (None, 0, Some("no shared items".to_string())),
                Err(e) => return Err(e),
            };
            pairs.push(PairAgreement {
                rater_a: left.0.clone(),
                rater_b: right.0.clone(),
                group,
                kappa,
                n_items,
                dropped_a: left.1.len() - n_items,
                dropped_b: right.1.len() - n_items,
                error,
            });
        }
    }
    pairs.sort_by_key(|p| p.group);

    let members: Vec<&(String, LabelVector)> = match &options.multi_rater {
        Some(selected) => vectors.iter().filter(|(n, _)| selected.contains(n)).collect(),
        None => vectors.iter().collect(),
    };
    let multi_rater = (members.len() >= 3).then(|| {
        let raters = members.iter().map(|(n, _)| n.clone()).collect();
        let refs: Vec<&LabelVector> = members.iter().map(|(_, v)| v).collect();
        let (kappa, n_items, error) = match fleiss_from_vectors(&refs) {
            Ok((k, n)) => (Some(k), n, None),
            Err(e) => (None, 0, Some(e.to_string())),
        };
        MultiRaterAgreement { statistic: "fleiss_kappa".into(), raters, kappa, n_items, error }
    });
    Ok(AgreementReport { level: options.level.clone(), pairs, multi_rater })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hn(tokens: &[&str]) -> LabelVector {
        LabelVector::new(vec!["H".into(), "N".into()], tokens.iter().enumerate().map(|(i, t)| (format!("m{i}"), *t)))
            .unwrap()
    }

    #[test]
    fn perfect_agreement() {
        let a = hn(&["H", "N", "N", "H"]);
        assert_eq!(cohen_kappa(&a, &a).unwrap(), 1.0);
    }

    #[test]
    fn perfect_disagreement_is_minus_one() {
        let a = hn(&["H", "H", "N", "N"]);
        let b = hn(&["N", "N", "H", "H"]);
        assert_eq!(cohen_kappa(&a, &b).unwrap(), -1.0);
    }

    #[test]
    fn six_item_example() {
        // p_o = 4/6, p_e = (3*3 + 3*3)/36 = 1/2, kappa = (2/3 - 1/2)/(1/2)
        let a = hn(&["H", "H", "N", "N", "H", "N"]);
        let b = hn(&["H", "N", "N", "N", "H", "H"]);
        let d = cohen_detail(&a, &b).unwrap();
        assert!((d.observed - 4.0 / 6.0).abs() < 1e-15);
        assert!((d.expected - 0.5).abs() < 1e-15);
        assert!((d.kappa - 1.0 / 3.0).abs() < 1e-9);
    }

    #[test]
    fn intersection_only() {
        let a = hn(&["H", "N", "H"]);
        let b = LabelVector::new(vec!["H".into(), "N".into()], [("m0", "H"), ("m1", "N"), ("x", "H")]).unwrap();
        assert_eq!(cohen_detail(&a, &b).unwrap().n_items, 2);
        let c = LabelVector::new(vec!["H".into(), "N".into()], [("z", "H")]).unwrap();
        assert_eq!(cohen_kappa(&a, &c), Err(MetricError::EmptyIntersection));
    }

    #[test]
    fn degenerate_marginals() {
        let a = hn(&["H", "H", "H"]);
        assert_eq!(cohen_kappa(&a, &a).unwrap(), 1.0);
        let other = LabelVector::new(vec!["H".into(), "N".into()], [("m0", "N")]).unwrap();
        let one = LabelVector::new(vec!["H".into(), "N".into()], [("m0", "H")]).unwrap();
        // p_e = 0 here, not degenerate
        assert_eq!(cohen_kappa(&one, &other).unwrap(), 0.0);
    }

    #[test]
    fn fleiss_unanimous_and_degenerate() {
        let unanimous = vec![vec![3, 0], vec![0, 3], vec![3, 0]];
        assert_eq!(fleiss_kappa(&unanimous, 3).unwrap(), 1.0);
        let single_class = vec![vec![3, 0]; 5];
        assert_eq!(fleiss_kappa(&single_class, 3).unwrap(), 1.0);
    }

    #[test]
    fn fleiss_rejects_ragged() {
        assert!(matches!(fleiss_kappa(&[vec![2, 1], vec![1, 1]], 3), Err(MetricError::Argument(_))));
        assert!(matches!(fleiss_kappa(&[vec![2, 1], vec![1, 1, 1]], 3), Err(MetricError::Argument(_))));
    }

    #[test]
    fn matrix_shapes() {
        let a = hn(&["H", "N", "H", "N"]);
        let named: Vec<(String, LabelVector)> = ["x", "y", "z"].iter().map(|n| (n.to_string(), a.clone())).collect();
        let report = agreement_matrix(&named, &AgreementOptions::new("coarse")).unwrap();
        assert_eq!(report.pairs.len(), 3);
        assert!(report.pairs.iter().all(|p| p.kappa == Some(1.0)));
        assert_eq!(report.multi_rater.as_ref().unwrap().kappa, Some(1.0));

        let report = agreement_matrix(&named[..2], &AgreementOptions::new("coarse")).unwrap();
        assert_eq!(report.pairs.len(), 1);
        assert!(report.multi_rater.is_none());
        assert_eq!((report.pairs[0].rater_a.as_str(), report.pairs[0].rater_b.as_str()), ("y", "x"));
    }

    #[test]
    fn human_goes_right() {
        let a = hn(&["H", "N", "H", "N"]);
        let named = vec![("human".to_string(), a.clone()), ("sonnet".to_string(), a.clone())];
        let report = agreement_matrix(&named, &AgreementOptions::new("coarse")).unwrap();
        let pair = &report.pairs[0];
        assert_eq!((pair.rater_a.as_str(), pair.rater_b.as_str()), ("sonnet", "human"));
        assert_eq!(pair.group, PairGroup::VsHuman);
    }
}
