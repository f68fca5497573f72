use std::net::SocketAddr;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

/// Meme hatefulness labelling: dataset tooling, multi-agent annotation,
/// agreement metrics, evaluation and a human review service.
///
/// Exit codes: 0 success, 1 runtime error, 2 usage error, 3 validation
/// failure, 4 partial annotation failure or unresolved memes, 5 degenerate
/// metric.
#[derive(Debug, Parser)]
#[command(name = "memelabel", version)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Validate a meme manifest and summarize it.
    Ingest(IngestArgs),
    /// Assign train/dev/test splits stratified by propaganda label.
    Split(SplitArgs),
    /// Label every meme with every configured annotator agent.
    Annotate(AnnotateArgs),
    /// Resolve annotator disagreements and write the consolidated labels.
    Consolidate(ConsolidateArgs),
    /// Export one label source as a label file.
    Export(ExportArgs),
    /// Cohen's kappa for every pair of label files, plus Fleiss' kappa.
    Agree(AgreeArgs),
    /// Label distribution per split, propaganda x hate cross-tab and class weights.
    Stats(StatsArgs),
    /// Accuracy, macro-F1, per-class scores and confusion matrix.
    Eval(EvalArgs),
    /// Re-render a JSON report written by agree, stats or eval.
    Render(RenderArgs),
    /// Run the human review HTTP service.
    Serve(ServeArgs),
}

#[derive(Debug, Args)]
pub struct ManifestArgs {
    /// Meme manifest (JSONL, one record per line).
    #[arg(long)]
    pub manifest: PathBuf,
    /// Do not require image files to exist.
    #[arg(long)]
    pub no_image_check: bool,
    /// Directory image paths are resolved against (default: the manifest's directory).
    #[arg(long)]
    pub image_root: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    #[command(flatten)]
    pub manifest: ManifestArgs,
    /// Directory for the JSON report.
    #[arg(long, default_value = "reports")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SplitArgs {
    #[command(flatten)]
    pub manifest: ManifestArgs,
    /// Where to write the manifest with splits assigned.
    #[arg(long)]
    pub output: PathBuf,
    /// train,dev,test ratios; must sum to 1.
    #[arg(long, default_value = "0.7,0.1,0.2")]
    pub ratios: String,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub manifest: ManifestArgs,
    /// Agent roster (TOML).
    #[arg(long)]
    pub agents: PathBuf,
    /// Run directory.
    #[arg(long)]
    pub run: PathBuf,
    /// Response cache file (default: .memelabel-cache/responses.jsonl next to the manifest).
    #[arg(long)]
    pub cache: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AnnotateArgs {
    #[command(flatten)]
    pub common: RunArgs,
    /// Continue an existing run directory.
    #[arg(long, conflicts_with = "force")]
    pub resume: bool,
    /// Replace an existing run directory.
    #[arg(long)]
    pub force: bool,
    /// Only annotate memes of this split.
    #[arg(long)]
    pub split: Option<String>,
    /// Only annotate the first N memes (after --split).
    #[arg(long)]
    pub limit: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ConsolidateArgs {
    #[command(flatten)]
    pub common: RunArgs,
    /// Send every meme to the consolidator, not only disagreements.
    #[arg(long)]
    pub consolidate_all: bool,
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    /// `consolidated`, an annotator name, or `human` / `human:<id>` (with --store).
    #[arg(long, default_value = "consolidated")]
    pub source: String,
    /// Run directory to export from.
    #[arg(long, required_unless_present = "store", conflicts_with = "store")]
    pub run: Option<PathBuf>,
    /// Review-service label store to export human labels from.
    #[arg(long, requires = "manifest")]
    pub store: Option<PathBuf>,
    /// Manifest giving the export order (with --store).
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// Output label file; unresolved memes go to `<output>.unresolved.jsonl`.
    #[arg(long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct AgreeArgs {
    /// Label files, as `path` or `name=path`; the name defaults to the file stem.
    #[arg(required = true, num_args = 2..)]
    pub files: Vec<String>,
    /// coarse, fine, hateful-fine or not-hateful-fine.
    #[arg(long, default_value = "coarse")]
    pub level: String,
    /// Shorthand for --level fine.
    #[arg(long, conflicts_with = "level")]
    pub fine_grained: bool,
    /// Comma-separated raters for Fleiss' kappa (default: all).
    #[arg(long, value_delimiter = ',')]
    pub multi_rater: Option<Vec<String>>,
    /// Rater names treated as the human reference.
    #[arg(long = "human", default_value = "human")]
    pub human: Vec<String>,
    /// Rater names treated as the consolidator.
    #[arg(long = "consolidator", default_value = "consolidated")]
    pub consolidator: Vec<String>,
    /// Directory for the JSON report.
    #[arg(long, default_value = "reports")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    #[command(flatten)]
    pub manifest: ManifestArgs,
    /// Label file supplying coarse labels.
    #[arg(long)]
    pub labels: PathBuf,
    /// Label file supplying fine-grained labels (default: --labels).
    #[arg(long)]
    pub fine_labels: Option<PathBuf>,
    /// Split for the propaganda x hate cross-tab (`all` for every split).
    #[arg(long, default_value = "test")]
    pub crosstab_split: String,
    /// Split whose coarse counts give the class weights.
    #[arg(long, default_value = "train")]
    pub weights_split: String,
    /// Directory for the JSON report.
    #[arg(long, default_value = "reports")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Gold label file.
    #[arg(long)]
    pub gold: PathBuf,
    /// Predicted label file.
    #[arg(long)]
    pub pred: PathBuf,
    /// coarse, fine, hateful-fine or not-hateful-fine.
    #[arg(long, default_value = "coarse")]
    pub level: String,
    /// Row title in the summary table (default: the prediction file stem).
    #[arg(long)]
    pub title: Option<String>,
    /// Directory for the JSON report.
    #[arg(long, default_value = "reports")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct RenderArgs {
    /// A JSON report written by agree, stats or eval.
    pub report: PathBuf,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    /// Meme manifest.
    #[arg(long)]
    pub manifest: PathBuf,
    /// Annotation run whose agent labels are shown and compared.
    #[arg(long)]
    pub run: Option<PathBuf>,
    /// Directory holding the human label journal.
    #[arg(long)]
    pub store: PathBuf,
    #[arg(long, default_value = "127.0.0.1:8080")]
    pub bind: SocketAddr,
    /// Allowed CORS origin (repeatable; default: any).
    #[arg(long = "cors-origin")]
    pub cors_origins: Vec<String>,
}
