use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Parser, Debug)]
#[command(
    name = "ccbench",
    version,
    about = "Color-constancy benchmark harness and dataset linter"
)]
pub struct Cli {
    /// Worker threads for per-image work (default: all cores). Never changes output.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,

    /// Report format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Subtract the black level from every image in a manifest.
    Subtract(SubtractArgs),
    /// Estimate the illuminant of every image with one method.
    Estimate(EstimateArgs),
    /// Extract ground truth from the annotated achromatic patches.
    ExtractGt(ExtractGtArgs),
    /// Score estimates against ground truth, or tabulate finished runs.
    Evaluate(EvaluateArgs),
    /// Per-image angle between two ground-truth tables.
    DiffGt(DiffGtArgs),
    /// Run the dataset hygiene checks.
    Lint(LintArgs),
    /// Build or load cross-validation folds and audit them.
    Folds(FoldsArgs),
    /// Render a synthetic benchmark dataset.
    Simulate(SimulateArgs),
    /// Score a zero-error oracle on mismatched pipelines over several black levels.
    OracleExperiment(OracleArgs),
    /// rb-chromaticity scatter of a ground-truth table (CSV + SVG).
    PlotChroma(PlotArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Subtract(_) => "subtract",
            Command::Estimate(_) => "estimate",
            Command::ExtractGt(_) => "extract-gt",
            Command::Evaluate(_) => "evaluate",
            Command::DiffGt(_) => "diff-gt",
            Command::Lint(_) => "lint",
            Command::Folds(_) => "folds",
            Command::Simulate(_) => "simulate",
            Command::OracleExperiment(_) => "oracle-experiment",
            Command::PlotChroma(_) => "plot-chroma",
        }
    }
}

/// How images that still carry their black level are treated.
#[derive(Args, Debug, Clone, Copy, Default, Serialize)]
pub struct PipelineArgs {
    /// Subtract the black level before processing.
    #[arg(long, conflicts_with = "unsafe_allow_unsubtracted")]
    pub subtract_black: bool,

    /// Process unsubtracted images as they are. Reproduces the wrong
    /// pipeline on purpose; every report produced this way is marked.
    #[arg(long)]
    pub unsafe_allow_unsubtracted: bool,
}

#[derive(Args, Debug, Serialize)]
pub struct SubtractArgs {
    #[arg(long)]
    pub manifest: PathBuf,

    /// Output directory for the subtracted dataset.
    #[arg(long)]
    #[serde(skip)]
    pub out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
pub struct EstimateArgs {
    #[arg(long)]
    pub manifest: PathBuf,

    /// e.g. "gray-world", "shades-of-gray:p=6", "gray-edge:n=1,p=1,sigma=6".
    #[arg(long)]
    pub estimator: String,

    #[command(flatten)]
    pub pipeline: PipelineArgs,

    /// Keep near-saturated pixels in the statistics.
    #[arg(long)]
    pub no_mask: bool,

    #[arg(long, default_value_t = 0.02)]
    pub clip_margin: f64,

    /// Estimates CSV; provenance goes next to it.
    #[arg(long)]
    #[serde(skip)]
    pub out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
pub struct ExtractGtArgs {
    #[arg(long)]
    pub manifest: PathBuf,

    /// Annotation file (default: the one named in the manifest).
    #[arg(long)]
    pub annotations: Option<PathBuf>,

    /// Use only these patch indices, e.g. "0,1,2".
    #[arg(long, value_delimiter = ',')]
    pub patches: Option<Vec<usize>>,

    #[arg(long, default_value_t = 0.02)]
    pub clip_margin: f64,

    /// Identifier recorded with the table (default: the output file stem).
    #[arg(long)]
    pub id: Option<String>,

    #[command(flatten)]
    pub pipeline: PipelineArgs,

    #[arg(long)]
    #[serde(skip)]
    pub out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
pub struct EvaluateArgs {
    #[arg(long, required_unless_present = "runs", requires = "gt")]
    pub estimates: Option<PathBuf>,

    #[arg(long, requires = "estimates")]
    pub gt: Option<PathBuf>,

    /// Ground-truth identifier (default: from provenance, else the file stem).
    #[arg(long)]
    pub gt_id: Option<String>,

    /// Pipeline of the estimates when they carry no provenance file.
    #[arg(long)]
    pub pipeline: Option<String>,

    /// Pipeline of the ground truth when it carries no provenance file.
    #[arg(long)]
    pub gt_pipeline: Option<String>,

    /// Tabulate existing run reports instead of scoring.
    #[arg(long, num_args = 1.., conflicts_with_all = ["estimates", "gt"])]
    pub runs: Option<Vec<PathBuf>>,

    /// Allow runs against different ground truths in one table.
    #[arg(long, requires = "runs")]
    pub force_mixed: bool,

    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
pub struct DiffGtArgs {
    #[arg(long)]
    pub a: PathBuf,

    #[arg(long)]
    pub b: PathBuf,

    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum FailOn {
    Warn,
    Fail,
}

#[derive(Args, Debug, Serialize)]
pub struct LintArgs {
    #[arg(long)]
    pub manifest: PathBuf,

    /// Ground truth for the camera-split check (default: the manifest's).
    #[arg(long)]
    pub gt: Option<PathBuf>,

    #[arg(long, default_value_t = 0.01)]
    pub black_threshold: f64,

    /// Fold file to audit.
    #[arg(long)]
    pub folds: Option<PathBuf>,

    #[arg(long, default_value_t = 0.02)]
    pub centroid_threshold: f64,

    /// JSON list of {image_id, regions: [{label, quad}]} asserted achromatic.
    #[arg(long)]
    pub regions: Option<PathBuf>,

    #[arg(long, default_value_t = 1.0)]
    pub uniform_threshold: f64,

    /// Two estimate files to compare for pipeline forensics.
    #[arg(long, num_args = 2, requires_all = ["gt_sub", "gt_unsub"])]
    pub forensics: Option<Vec<PathBuf>>,

    #[arg(long)]
    pub gt_sub: Option<PathBuf>,

    #[arg(long)]
    pub gt_unsub: Option<PathBuf>,

    #[command(flatten)]
    pub pipeline: PipelineArgs,

    /// Lowest severity that makes the run exit with status 3.
    #[arg(long, value_enum, default_value_t = FailOn::Fail)]
    pub fail_on: FailOn,

    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum FoldMode {
    /// Contiguous blocks in manifest order.
    None,
    /// SplitMix64 + Fisher-Yates shuffle of the manifest order.
    Seeded,
    /// Load the folds from --from.
    External,
    /// Deal each camera's images round-robin across folds.
    Stratified,
}

#[derive(Args, Debug, Serialize)]
pub struct FoldsArgs {
    #[arg(long)]
    pub manifest: PathBuf,

    #[arg(long, default_value_t = 3)]
    pub k: usize,

    #[arg(long, value_enum, default_value_t = FoldMode::None)]
    pub mode: FoldMode,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// Fold file for --mode external.
    #[arg(long, required_if_eq("mode", "external"))]
    pub from: Option<PathBuf>,

    /// Ground truth for the centroid check (default: the manifest's, if any).
    #[arg(long)]
    pub gt: Option<PathBuf>,

    #[arg(long, default_value_t = 0.02)]
    pub centroid_threshold: f64,

    #[arg(long, value_enum, default_value_t = FailOn::Fail)]
    pub fail_on: FailOn,

    /// Fold file to write.
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,

    /// Audit report (default: stdout).
    #[arg(long)]
    #[serde(skip)]
    pub report: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct SceneArgs {
    /// Camera models: "reference" and/or "shifted".
    #[arg(long, value_delimiter = ',', default_value = "reference")]
    pub cameras: Vec<String>,

    /// Images per camera, in camera order (default: as even as possible).
    #[arg(long, value_delimiter = ',')]
    pub camera_counts: Option<Vec<usize>>,

    #[arg(long, default_value_t = 64)]
    pub width: usize,

    #[arg(long, default_value_t = 64)]
    pub height: usize,

    #[arg(long, default_value_t = 2500.0)]
    pub cct_min: f64,

    #[arg(long, default_value_t = 7500.0)]
    pub cct_max: f64,

    #[arg(long, default_value_t = 0.0)]
    pub noise_sigma: f64,

    /// Brightest chart patch as a fraction of headroom.
    #[arg(long, default_value_t = 0.6)]
    pub exposure: f64,
}

#[derive(Args, Debug, Serialize)]
pub struct SimulateArgs {
    #[arg(long, default_value_t = 20)]
    pub n: usize,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    #[command(flatten)]
    pub scene: SceneArgs,

    /// Pedestal added to every channel.
    #[arg(long, default_value_t = 129.0)]
    pub black_level: f64,

    /// Write pedestal-free, already subtracted images.
    #[arg(long)]
    pub no_black: bool,

    /// Keep fractional values instead of rounding to integer counts.
    #[arg(long)]
    pub no_quantize: bool,

    #[arg(long)]
    #[serde(skip)]
    pub out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
pub struct OracleArgs {
    #[arg(long, default_value_t = 50)]
    pub n: usize,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    #[arg(long, value_delimiter = ',', default_value = "64,129,256,512")]
    pub black_levels: Vec<f64>,

    #[command(flatten)]
    pub scene: SceneArgs,

    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
pub struct PlotArgs {
    #[arg(long)]
    pub gt: PathBuf,

    #[arg(long)]
    pub title: Option<String>,

    /// Output prefix: writes <prefix>.csv and <prefix>.svg.
    #[arg(long)]
    #[serde(skip)]
    pub out: PathBuf,
}
