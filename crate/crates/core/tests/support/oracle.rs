//! Straight-from-the-formula metric implementations used as test oracles.
//! Deliberately naive: float arithmetic, explicit loops, no shared code
//! with the library.

#![allow(dead_code, clippy::needless_range_loop)]

/// Cohen's kappa from two equal-length class-index slices.
/// `None` marks the undefined case (expected agreement 1, observed < 1).
pub fn cohen(a: &[usize], b: &[usize], k: usize) -> Option<f64> {
    let n = a.len() as f64;
    let mut confusion = vec![vec![0.0f64; k]; k];
    for i in 0..a.len() {
        confusion[a[i]][b[i]] += 1.0;
    }
    let mut p_o = 0.0;
    for c in 0..k {
        p_o += confusion[c][c] / n;
    }
    let mut p_e = 0.0;
    for c in 0..k {
        let row: f64 = (0..k).map(|j| confusion[c][j]).sum();
        let col: f64 = (0..k).map(|j| confusion[j][c]).sum();
        p_e += (row / n) * (col / n);
    }
    if (1.0 - p_e).abs() < 1e-15 {
        return if (p_o - 1.0).abs() < 1e-15 { Some(1.0) } else { None };
    }
    Some((p_o - p_e) / (1.0 - p_e))
}

/// Fleiss' kappa from per-item category counts.
pub fn fleiss(counts: &[Vec<usize>], raters: usize) -> Option<f64> {
    let n_items = counts.len() as f64;
    let r = raters as f64;
    let k = counts[0].len();
    let mut p_bar = 0.0;
    for row in counts {
        let mut s = 0.0;
        for &x in row {
            s += (x * x) as f64;
        }
        p_bar += (s - r) / (r * (r - 1.0));
    }
    p_bar /= n_items;
    let mut p_e = 0.0;
    for c in 0..k {
        let mut col = 0.0;
        for row in counts {
            col += row[c] as f64;
        }
        let p = col / (n_items * r);
        p_e += p * p;
    }
    if (1.0 - p_e).abs() < 1e-15 {
        return if (p_bar - 1.0).abs() < 1e-15 { Some(1.0) } else { None };
    }
    Some((p_bar - p_e) / (1.0 - p_e))
}

/// Scott's pi for two raters: shared marginals pooled over both.
pub fn scott_pi(a: &[usize], b: &[usize], k: usize) -> Option<f64> {
    let n = a.len() as f64;
    let p_o = a.iter().zip(b).filter(|(x, y)| x == y).count() as f64 / n;
    let mut p_e = 0.0;
    for c in 0..k {
        let pooled = (a.iter().filter(|&&x| x == c).count() + b.iter().filter(|&&x| x == c).count()) as f64 / (2.0 * n);
        p_e += pooled * pooled;
    }
    if (1.0 - p_e).abs() < 1e-15 {
        return if (p_o - 1.0).abs() < 1e-15 { Some(1.0) } else { None };
    }
    Some((p_o - p_e) / (1.0 - p_e))
}

pub struct NaiveEval {
    pub accuracy: f64,
    pub macro_f1: f64,
    /// (class, tp, fp, fn, f1) for classes present in gold or pred.
    pub per_class: Vec<(usize, usize, usize, usize, f64)>,
}

pub fn evaluate(gold: &[usize], pred: &[usize], k: usize) -> NaiveEval {
    let n = gold.len();
    let correct = (0..n).filter(|&i| gold[i] == pred[i]).count();
    let mut per_class = Vec::new();
    for c in 0..k {
        if !gold.contains(&c) && !pred.contains(&c) {
            continue;
        }
        let mut tp = 0;
        let mut fp = 0;
        let mut fn_ = 0;
        for i in 0..n {
            if gold[i] == c && pred[i] == c {
                tp += 1;
            } else if pred[i] == c {
                fp += 1;
            } else if gold[i] == c {
                fn_ += 1;
            }
        }
        let precision = if tp + fp == 0 { 0.0 } else { tp as f64 / (tp + fp) as f64 };
        let recall = if tp + fn_ == 0 { 0.0 } else { tp as f64 / (tp + fn_) as f64 };
        let f1 = if precision + recall == 0.0 { 0.0 } else { 2.0 * precision * recall / (precision + recall) };
        per_class.push((c, tp, fp, fn_, f1));
    }
    let macro_f1 = per_class.iter().map(|p| p.4).sum::<f64>() / per_class.len() as f64;
    NaiveEval { accuracy: correct as f64 / n as f64, macro_f1, per_class }
}
