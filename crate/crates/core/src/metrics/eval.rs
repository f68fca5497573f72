use serde::{Deserialize, Serialize};

use super::{LabelVector, MetricError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassScore {
    pub class: String,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Gold items of this class.
    pub support: usize,
    pub predicted: usize,
    pub true_positives: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub n: usize,
    pub accuracy: f64,
    pub macro_f1: f64,
    /// Classes present in gold or predictions, in alphabet order. Indexes
    /// rows (gold) and columns (predicted) of `confusion`.
    pub classes: Vec<String>,
    pub per_class: Vec<ClassScore>,
    pub confusion: Vec<Vec<usize>>,
    /// Predictions for ids that are not in gold.
    pub ignored_predictions: usize,
}

/// Scores `pred` against `gold`. Every gold id needs a prediction; extra
/// predictions are ignored.
pub fn evaluate(gold: &LabelVector, pred: &LabelVector) -> Result<EvalReport, MetricError> {
    if gold.alphabet() != pred.alphabet() {
        return Err(MetricError::AlphabetMismatch);
    }
    if gold.is_empty() {
        return Err(MetricError::Argument("gold label vector is empty".into()));
    }
    let pred_index = pred.index();
    let mut missing = Vec::new();
    let mut pairs = Vec::with_capacity(gold.len());
    for (id, g) in gold.entries() {
        match pred_index.get(id.as_str()) {
            Some(&p) => pairs.push((*g, p)),
            None => missing.push(id.clone()),
        }
    }
    if !missing.is_empty() {
        return Err(MetricError::MissingPredictions(missing));
    }

    let k = gold.alphabet().len();
    let mut full = vec![vec![0usize; k]; k];
    for &(g, p) in &pairs {
        full[g][p] += 1;
    }
    let present: Vec<usize> = (0..k).filter(|&c| (0..k).any(|o| full[c][o] > 0 || full[o][c] > 0)).collect();

    let n = pairs.len();
    let correct: usize = (0..k).map(|c| full[c][c]).sum();
    let per_class: Vec<ClassScore> = present
        .iter()
        .map(|&c| {
            let tp = full[c][c];
            let support: usize = full[c].iter().sum();
            let predicted: usize = full.iter().map(|row| row[c]).sum();
            ClassScore {
                class: gold.alphabet()[c].clone(),
                precision: ratio(tp, predicted),
                recall: ratio(tp, support),
                // 2TP / (2TP + FP + FN), which is the harmonic mean of
                // precision and recall with 0/0 taken as 0
                f1: ratio(2 * tp, support + predicted),
                support,
                predicted,
                true_positives: tp,
            }
        })
        .collect();
    let macro_f1 = per_class.iter().map(|s| s.f1).sum::<f64>() / per_class.len() as f64;
    let confusion = present.iter().map(|&g| present.iter().map(|&p| full[g][p]).collect()).collect();
    Ok(EvalReport {
        n,
        accuracy: correct as f64 / n as f64,
        macro_f1,
        classes: present.iter().map(|&c| gold.alphabet()[c].clone()).collect(),
        per_class,
        confusion,
        ignored_predictions: pred.len() - n,
    })
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vector(tokens: &[&str]) -> LabelVector {
        LabelVector::new(
            vec!["H".into(), "N".into(), "C".into()],
            tokens.iter().enumerate().map(|(i, t)| (format!("m{i}"), *t)),
        )
        .unwrap()
    }

    #[test]
    fn perfect_prediction() {
        let g = vector(&["H", "N", "N", "C"]);
        let r = evaluate(&g, &g).unwrap();
        assert_eq!(r.accuracy, 1.0);
        assert_eq!(r.macro_f1, 1.0);
    }

    #[test]
    fn four_item_example() {
        // confusion: TP_H = 1, FN_H = 1, TN = 2
        let r = evaluate(&vector(&["H", "H", "N", "N"]), &vector(&["H", "N", "N", "N"])).unwrap();
        assert_eq!(r.accuracy, 0.75);
        assert!((r.per_class[0].f1 - 2.0 / 3.0).abs() < 1e-12);
        assert!((r.per_class[1].f1 - 0.8).abs() < 1e-12);
        assert!((r.macro_f1 - 0.733_333_333_333).abs() < 1e-9);
        assert_eq!(r.confusion, vec![vec![1, 1], vec![0, 2]]);
    }

    #[test]
    fn class_missing_from_predictions_scores_zero() {
        let r = evaluate(&vector(&["H", "C", "N"]), &vector(&["H", "N", "N"])).unwrap();
        let c = r.per_class.iter().find(|s| s.class == "C").unwrap();
        assert_eq!(c.f1, 0.0);
        assert_eq!(r.per_class.len(), 3);
        assert!((r.macro_f1 - (1.0 + 2.0 / 3.0 + 0.0) / 3.0).abs() < 1e-12);
    }

    #[test]
    fn missing_predictions_listed() {
        let gold = vector(&["H", "N", "N"]);
        let pred = LabelVector::new(gold.alphabet().to_vec(), [("m0", "H")]).unwrap();
        match evaluate(&gold, &pred) {
            Err(MetricError::MissingPredictions(ids)) => assert_eq!(ids, ["m1", "m2"]),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn extra_predictions_ignored() {
        let gold = LabelVector::new(vec!["H".into(), "N".into()], [("a", "H")]).unwrap();
        let pred = LabelVector::new(vec!["H".into(), "N".into()], [("a", "H"), ("b", "N")]).unwrap();
        let r = evaluate(&gold, &pred).unwrap();
        assert_eq!((r.n, r.ignored_predictions), (1, 1));
    }
}
