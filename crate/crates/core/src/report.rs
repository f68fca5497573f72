//! Plain-text table rendering for reports.

use std::fmt::Write;

use crate::dataset::{ClassWeights, CrossTab, DistributionReport};
use crate::labels::{CoarseLabel, FineLabel};
use crate::metrics::{AgreementReport, EvalReport, PairGroup};

/// Fine categories in the row order used by the distribution table.
const HATEFUL_ROWS: [FineLabel; 8] = [
    FineLabel::Contempt,
    FineLabel::Dehumanizing,
    FineLabel::Mocking,
    FineLabel::Inferiority,
    FineLabel::Exclusion,
    FineLabel::IncitingViolence,
    FineLabel::Slurs,
    FineLabel::OtherHateful,
];
const NOT_HATEFUL_ROWS: [FineLabel; 3] = [FineLabel::Sarcasm, FineLabel::Humor, FineLabel::OtherNotHateful];

/// A left-aligned first column followed by right-aligned columns.
#[derive(Debug, Default)]
pub struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Table { header: header.into_iter().map(Into::into).collect(), rows: Vec::new() }
    }

    pub fn row<S: Into<String>>(&mut self, cells: impl IntoIterator<Item = S>) -> &mut Self {
        self.rows.push(cells.into_iter().map(Into::into).collect());
        self
    }

    pub fn render(&self) -> String {
        let cols = self.header.len();
        let mut widths: Vec<usize> = self.header.iter().map(|h| h.chars().count()).collect();
        for row in &self.rows {
            for (i, cell) in row.iter().enumerate().take(cols) {
                widths[i] = widths[i].max(cell.chars().count());
            }
        }
        let line = |cells: &[String]| {
            let mut out = String::new();
            for (i, width) in widths.iter().enumerate() {
                let cell = cells.get(i).map(String::as_str).unwrap_or("");
                let pad = width - cell.chars().count();
                if i == 0 {
                    out.push_str(cell);
                    out.push_str(&" ".repeat(pad));
                } else {
                    out.push_str("  ");
                    out.push_str(&" ".repeat(pad));
                    out.push_str(cell);
                }
            }
            out.trim_end().to_string()
        };
        let rule = "-".repeat(widths.iter().sum::<usize>() + 2 * (cols.saturating_sub(1)));
        let mut out = String::new();
        out.push_str(&line(&self.header));
        out.push('\n');
        out.push_str(&rule);
        out.push('\n');
        for row in &self.rows {
            out.push_str(&line(row));
            out.push('\n');
        }
        out
    }
}

/// `1931` → `1,931`.
pub fn thousands(n: usize) -> String {
    let digits = n.to_string();
    let mut out = String::new();
    for (i, c) in digits.chars().enumerate() {
        if i > 0 && (digits.len() - i).is_multiple_of(3) {
            out.push(',');
        }
        out.push(c);
    }
    out
}

fn split_header(report: &DistributionReport) -> Vec<String> {
    let mut header = vec!["Label".to_string()];
    header.extend(report.splits.iter().map(|s| {
        let mut name = s.split.clone();
        if let Some(first) = name.get_mut(0..1) {
            first.make_ascii_uppercase();
        }
        name
    }));
    header
}

pub fn render_distribution(report: &DistributionReport) -> String {
    let header = split_header(report);
    let mut out = String::new();

    out.push_str("Hate/Not-hate\n");
    let mut coarse = Table::new(header.clone());
    for label in CoarseLabel::ALL {
        let mut row = vec![label.title().to_string()];
        row.extend(report.splits.iter().map(|s| thousands(s.coarse_count(label))));
        coarse.row(row);
    }
    let mut total = vec!["Total".to_string()];
    total.extend(report.splits.iter().map(|s| thousands(s.coarse_total)));
    coarse.row(total);
    if report.splits.iter().any(|s| s.unlabeled > 0) {
        let mut row = vec!["(unlabeled)".to_string()];
        row.extend(report.splits.iter().map(|s| thousands(s.unlabeled)));
        coarse.row(row);
    }
    out.push_str(&coarse.render());

    type Total = fn(&crate::dataset::SplitDistribution) -> usize;
    let families: [(&str, &[FineLabel], Total); 2] = [
        ("Hate: fine-grained categories", &HATEFUL_ROWS, |s| s.fine_hateful_total),
        ("Not-hate: fine-grained categories", &NOT_HATEFUL_ROWS, |s| s.fine_not_hateful_total),
    ];
    for (title, rows, total_of) in families {
        out.push('\n');
        out.push_str(title);
        out.push('\n');
        let mut table = Table::new(header.clone());
        for &fine in rows {
            let mut row = vec![fine.title().to_string()];
            row.extend(report.splits.iter().map(|s| thousands(s.fine_count(fine))));
            table.row(row);
        }
        let mut total = vec!["Total".to_string()];
        total.extend(report.splits.iter().map(|s| thousands(total_of(s))));
        table.row(total);
        out.push_str(&table.render());
    }

    if !report.warnings.is_empty() {
        out.push_str("\nWarnings\n");
        for warning in &report.warnings {
            let _ = writeln!(out, "  - {warning}");
        }
    }
    out
}

pub fn render_crosstab(tab: &CrossTab) -> String {
    let scope = tab.split.map(|s| s.as_str()).unwrap_or("all splits");
    let mut out = format!("Propaganda x hate ({scope})\n");
    let mut table = Table::new(["", "Hateful", "Not-Hateful", "Total"]);
    table.row([
        "Propagandistic".to_string(),
        thousands(tab.propagandistic_hateful),
        thousands(tab.propagandistic_not_hateful),
        thousands(tab.propagandistic_total),
    ]);
    table.row([
        "Not propagandistic".to_string(),
        thousands(tab.not_propagandistic_hateful),
        thousands(tab.not_propagandistic_not_hateful),
        thousands(tab.not_propagandistic_total),
    ]);
    table.row([
        "Total".to_string(),
        thousands(tab.hateful_total),
        thousands(tab.not_hateful_total),
        thousands(tab.total),
    ]);
    out.push_str(&table.render());
    match tab.hateful_share_of_propagandistic {
        Some(share) => {
            let _ = writeln!(
                out,
                "Hateful share of propagandistic memes: {}/{} = {:.3}",
                tab.propagandistic_hateful, tab.propagandistic_total, share
            );
        }
        None => out.push_str("Hateful share of propagandistic memes: undefined (no propagandistic memes)\n"),
    }
    if tab.unlabeled > 0 {
        let _ = writeln!(out, "({} memes without a coarse label skipped)", tab.unlabeled);
    }
    out
}

pub fn render_class_weights(weights: &ClassWeights) -> String {
    let mut table = Table::new(["Class", "Count", "Weight"]);
    for (class, weight) in &weights.weights {
        table.row([class.clone(), thousands(weights.counts[class]), format!("{weight:.3}")]);
    }
    format!("Class weights N/(K*N_c)\n{}", table.render())
}

fn kappa_cell(kappa: Option<f64>) -> String {
    kappa.map_or_else(|| "undefined".to_string(), |k| format!("{k:.3}"))
}

pub fn render_agreement(report: &AgreementReport) -> String {
    let mut out = format!("Cohen's kappa ({} labels)\n", report.level);
    let name_width = report.pairs.iter().map(|p| p.rater_a.chars().count()).max().unwrap_or(0);
    let mut current: Option<PairGroup> = None;
    for pair in &report.pairs {
        if current != Some(pair.group) {
            if current.is_some() {
                out.push('\n');
            }
            let _ = writeln!(out, "{}", pair.group.title());
            current = Some(pair.group);
        }
        let mut line = format!(
            "  {:<width$} vs {}: κ={}  (n={})",
            pair.rater_a,
            pair.rater_b,
            kappa_cell(pair.kappa),
            pair.n_items,
            width = name_width
        );
        if pair.dropped_a + pair.dropped_b > 0 {
            let _ = write!(line, "  dropped {}/{}", pair.dropped_a, pair.dropped_b);
        }
        if let Some(err) = &pair.error {
            let _ = write!(line, "  [{err}]");
        }
        out.push_str(&line);
        out.push('\n');
    }
    if let Some(multi) = &report.multi_rater {
        let _ = writeln!(
            out,
            "\nMulti-rater agreement (Fleiss' kappa) over {}: κ={}  (n={})",
            multi.raters.join(", "),
            kappa_cell(multi.kappa),
            multi.n_items
        );
        if let Some(err) = &multi.error {
            let _ = writeln!(out, "  [{err}]");
        }
    }
    out
}

pub fn render_eval(title: &str, report: &EvalReport) -> String {
    let mut out = String::new();
    let mut summary = Table::new(["Setup", "Acc", "M-F1", "N"]);
    summary.row([
        title.to_string(),
        format!("{:.3}", report.accuracy),
        format!("{:.3}", report.macro_f1),
        thousands(report.n),
    ]);
    out.push_str(&summary.render());

    out.push('\n');
    let mut per_class = Table::new(["Class", "Precision", "Recall", "F1", "Support"]);
    for score in &report.per_class {
        per_class.row([
            score.class.clone(),
            format!("{:.3}", score.precision),
            format!("{:.3}", score.recall),
            format!("{:.3}", score.f1),
            thousands(score.support),
        ]);
    }
    out.push_str(&per_class.render());

    out.push_str("\nConfusion (rows gold, columns predicted)\n");
    let mut header = vec![String::new()];
    header.extend(report.classes.iter().cloned());
    let mut confusion = Table::new(header);
    for (class, row) in report.classes.iter().zip(&report.confusion) {
        let mut cells = vec![class.clone()];
        cells.extend(row.iter().map(|&n| thousands(n)));
        confusion.row(cells);
    }
    out.push_str(&confusion.render());
    if report.ignored_predictions > 0 {
        let _ = writeln!(out, "({} predictions for ids not in gold ignored)", report.ignored_predictions);
    }
    out
}
