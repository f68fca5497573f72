//! Randomized comparison of the library metrics against `oracle`.

#![allow(dead_code)]

use memelabel_core::metrics::{cohen_kappa, evaluate, fleiss_kappa, LabelVector, MetricError};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::oracle;

#[derive(Debug, Default)]
pub struct SuiteOutcome {
    pub instances: usize,
    pub max_cohen_diff: f64,
    pub max_fleiss_diff: f64,
    pub max_eval_diff: f64,
    pub max_scott_diff: f64,
    pub kappa_out_of_range: usize,
    pub failures: Vec<String>,
}

impl SuiteOutcome {
    pub fn passed(&self, tolerance: f64) -> bool {
        self.failures.is_empty()
            && self.kappa_out_of_range == 0
            && self.max_cohen_diff <= tolerance
            && self.max_fleiss_diff <= tolerance
            && self.max_eval_diff <= tolerance
            && self.max_scott_diff <= tolerance
    }
}

fn alphabet(k: usize) -> Vec<String> {
    (0..k).map(|c| format!("c{c}")).collect()
}

fn vector(k: usize, classes: &[usize]) -> LabelVector {
    let names = alphabet(k);
    LabelVector::new(names.clone(), classes.iter().enumerate().map(|(i, &c)| (format!("i{i}"), names[c].clone())))
        .unwrap()
}

/// Draws a skewed class sequence and a noisy copy of it.
fn draw_pair(rng: &mut ChaCha8Rng, n: usize, k: usize) -> (Vec<usize>, Vec<usize>) {
    let weights: Vec<f64> = (0..k).map(|_| rng.random::<f64>().powi(2) + 1e-3).collect();
    let total: f64 = weights.iter().sum();
    let sample = |rng: &mut ChaCha8Rng| {
        let mut x = rng.random::<f64>() * total;
        for (c, w) in weights.iter().enumerate() {
            if x < *w {
                return c;
            }
            x -= w;
        }
        k - 1
    };
    let a: Vec<usize> = (0..n).map(|_| sample(rng)).collect();
    let noise = rng.random::<f64>();
    let b = a.iter().map(|&c| if rng.random::<f64>() < noise { sample(rng) } else { c }).collect();
    (a, b)
}

fn diff(lib: Result<f64, MetricError>, oracle: Option<f64>) -> Result<f64, String> {
    match (lib, oracle) {
        (Ok(x), Some(y)) => Ok((x - y).abs()),
        (Err(MetricError::Degenerate { .. }), None) => Ok(0.0),
        (lib, oracle) => Err(format!("library {lib:?} vs oracle {oracle:?}")),
    }
}

pub fn run(instances: usize, seed: u64) -> SuiteOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = SuiteOutcome { instances, ..Default::default() };
    for instance in 0..instances {
        let n = rng.random_range(1..=500);
        let k = rng.random_range(2..=10);
        let (a, b) = draw_pair(&mut rng, n, k);
        let (va, vb) = (vector(k, &a), vector(k, &b));

        let cohen = cohen_kappa(&va, &vb);
        if let Ok(kappa) = cohen {
            if !(-1.0..=1.0).contains(&kappa) {
                out.kappa_out_of_range += 1;
            }
        }
        match diff(cohen, oracle::cohen(&a, &b, k)) {
            Ok(d) => out.max_cohen_diff = out.max_cohen_diff.max(d),
            Err(e) => out.failures.push(format!("cohen #{instance}: {e}")),
        }

        // Fleiss over 2..=6 raters built from noisy copies of `a`.
        let raters = rng.random_range(2..=6);
        let mut counts = vec![vec![0usize; k]; n];
        let mut columns = vec![a.clone()];
        for _ in 1..raters {
            columns.push(
                draw_pair(&mut rng, n, k)
                    .1
                    .iter()
                    .zip(&a)
                    .map(|(&x, &y)| if rng.random::<bool>() { x } else { y })
                    .collect(),
            );
        }
        for column in &columns {
            for (i, &c) in column.iter().enumerate() {
                counts[i][c] += 1;
            }
        }
        match diff(fleiss_kappa(&counts, raters), oracle::fleiss(&counts, raters)) {
            Ok(d) => out.max_fleiss_diff = out.max_fleiss_diff.max(d),
            Err(e) => out.failures.push(format!("fleiss #{instance}: {e}")),
        }
        if raters == 2 {
            let two = fleiss_kappa(&counts, 2);
            match diff(two, oracle::scott_pi(&columns[0], &columns[1], k)) {
                Ok(d) => out.max_scott_diff = out.max_scott_diff.max(d),
                Err(e) => out.failures.push(format!("scott #{instance}: {e}")),
            }
        }

        let report = evaluate(&va, &vb).unwrap();
        let naive = oracle::evaluate(&a, &b, k);
        if report.per_class.len() != naive.per_class.len() {
            out.failures.push(format!("eval #{instance}: class sets differ"));
            continue;
        }
        let mut worst = (report.accuracy - naive.accuracy).abs();
        worst = worst.max((report.macro_f1 - naive.macro_f1).abs());
        for (score, &(c, tp, fp, fn_, f1)) in report.per_class.iter().zip(&naive.per_class) {
            if score.class != format!("c{c}")
                || score.true_positives != tp
                || score.predicted != tp + fp
                || score.support != tp + fn_
            {
                out.failures.push(format!("eval #{instance}: counts differ for c{c}"));
            }
            worst = worst.max((score.f1 - f1).abs());
        }
        let diag: usize = (0..report.classes.len()).map(|i| report.confusion[i][i]).sum();
        let total: usize = report.confusion.iter().flatten().sum();
        if total != n || diag != (0..n).filter(|&i| a[i] == b[i]).count() {
            out.failures.push(format!("eval #{instance}: confusion totals differ"));
        }
        out.max_eval_diff = out.max_eval_diff.max(worst);
    }
    out
}
