//! JSON reports written next to the printed tables. Each carries enough
//! to re-render the same table with `memelabel render`.

use std::path::{Path, PathBuf};

use memelabel_core::dataset::{write_atomic, ClassWeights, CrossTab, DistributionReport};
use memelabel_core::metrics::{AgreementReport, EvalReport};
use memelabel_core::report::{
    render_agreement, render_class_weights, render_crosstab, render_distribution, render_eval,
};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SavedReport {
    Agreement {
        report: AgreementReport,
    },
    Stats {
        distribution: DistributionReport,
        crosstab: CrossTab,
        class_weights: Option<ClassWeights>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        class_weights_error: Option<String>,
    },
    Eval {
        title: String,
        report: EvalReport,
    },
}

impl SavedReport {
    pub fn file_name(&self) -> &'static str {
        match self {
            SavedReport::Agreement { .. } => "agreement.json",
            SavedReport::Stats { .. } => "stats.json",
            SavedReport::Eval { .. } => "eval.json",
        }
    }

    pub fn render(&self) -> String {
        match self {
            SavedReport::Agreement { report } => render_agreement(report),
            SavedReport::Stats { distribution, crosstab, class_weights, class_weights_error } => {
                let mut out = render_distribution(distribution);
                out.push('\n');
                out.push_str(&render_crosstab(crosstab));
                out.push('\n');
                match (class_weights, class_weights_error) {
                    (Some(w), _) => out.push_str(&render_class_weights(w)),
                    (None, Some(e)) => out.push_str(&format!("Class weights undefined: {e}\n")),
                    (None, None) => {}
                }
                out
            }
            SavedReport::Eval { title, report } => render_eval(title, report),
        }
    }

    /// Writes the report into `dir` and returns the path.
    pub fn save(&self, dir: &Path) -> Result<PathBuf, CliError> {
        std::fs::create_dir_all(dir).map_err(|e| CliError::runtime(format!("{}: {e}", dir.display())))?;
        let path = dir.join(self.file_name());
        let json = serde_json::to_vec_pretty(self).expect("report serializes");
        write_atomic(&path, &json)?;
        Ok(path)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::validation(format!("{}: {e}", path.display())))
    }
}
