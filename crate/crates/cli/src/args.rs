use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use scalelaw::{Direction, Format, LayerRange, ResidualSpace};
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(
    name = "scalelaw",
    version,
    about = "Fit, bootstrap and extrapolate scaling laws from experiment records"
)]
pub struct Cli {
    /// Output format for the report.
    #[arg(long, global = true, value_enum, default_value_t = OutputFormat::Json)]
    pub format: OutputFormat,

    /// Worker threads for bootstrap replicates (results do not depend on it).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Json,
    Table,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Least-squares power-law fit in log-log space.
    Fit(FitArgs),
    /// Slope and prediction-band confidence intervals.
    Bootstrap(BootstrapArgs),
    /// Extrapolate to a target scale.
    Predict(PredictArgs),
    /// Fit on one layer range, evaluate on another.
    Holdout(HoldoutArgs),
    /// Compare two method families at a target scale.
    Select(SelectArgs),
    /// Training FLOPs and compute savings.
    Flops(FlopsArgs),
    /// Convergence diagnostics.
    #[command(subcommand)]
    Diagnose(DiagnoseCommand),
    /// Generate synthetic records with a known law.
    Synth(SynthArgs),
    /// Render a log-log SVG plot.
    Plot(PlotArgs),
}

#[derive(Debug, Subcommand)]
pub enum DiagnoseCommand {
    /// Replay early stopping over an evaluation-loss curve.
    Earlystop(EarlyStopArgs),
    /// Check a held-out scale against the law fitted on the others.
    FitOutlier(FitOutlierArgs),
}

fn parse_layer_range(s: &str) -> Result<LayerRange, String> {
    s.parse()
}

fn parse_format(s: &str) -> Result<Format, String> {
    s.parse()
}

fn parse_space(s: &str) -> Result<ResidualSpace, String> {
    s.parse()
}

fn parse_direction(s: &str) -> Result<Direction, String> {
    s.parse()
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct DataArgs {
    /// Records file (JSONL or CSV).
    #[arg(long)]
    pub input: PathBuf,
    /// Input format; inferred from the extension when omitted.
    #[arg(long, value_parser = parse_format)]
    pub input_format: Option<Format>,
    #[arg(long)]
    pub task: Option<String>,
    #[arg(long)]
    pub family: Option<String>,
    #[arg(long)]
    pub metric: Option<String>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct BootArgs {
    /// Bootstrap replicates.
    #[arg(long = "B", default_value_t = scalelaw::bootstrap::DEFAULT_REPLICATES)]
    pub replicates: usize,
    #[arg(long, default_value_t = scalelaw::bootstrap::DEFAULT_LO_PCT)]
    pub lo: f64,
    #[arg(long, default_value_t = scalelaw::bootstrap::DEFAULT_HI_PCT)]
    pub hi: f64,
    /// Resampling strategy (hierarchical, naive).
    #[arg(long, default_value = "hierarchical")]
    pub mode: String,
    /// Random seed; required so every run is reproducible.
    #[arg(long)]
    pub seed: u64,
    #[arg(long, default_value_t = scalelaw::bootstrap::DEFAULT_MAX_REDRAWS)]
    pub max_redraws: usize,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct TargetArgs {
    #[arg(long, requires = "target_hidden", conflicts_with = "target_params")]
    pub target_layers: Option<u32>,
    #[arg(long, requires = "target_layers")]
    pub target_hidden: Option<u32>,
    #[arg(long)]
    pub target_params: Option<u64>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct FitArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Only fit runs with at least this many layers.
    #[arg(long, default_value_t = 1)]
    pub min_depth: u32,
    #[arg(long, value_parser = parse_space, default_value = "log")]
    pub r2_space: ResidualSpace,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct BootstrapArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub boot: BootArgs,
    /// Points in the prediction-band grid.
    #[arg(long, default_value_t = 20)]
    pub grid_points: usize,
    /// Extend the band grid to this parameter count.
    #[arg(long)]
    pub grid_max: Option<f64>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct PredictArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub target: TargetArgs,
    /// Observed value at the target, for the relative error.
    #[arg(long)]
    pub actual: Option<f64>,
    #[command(flatten)]
    pub boot: BootArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct HoldoutArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, value_parser = parse_layer_range)]
    pub train_layers: LayerRange,
    #[arg(long, value_parser = parse_layer_range)]
    pub test_layers: LayerRange,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SelectArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_parser = parse_format)]
    pub input_format: Option<Format>,
    #[arg(long)]
    pub task: Option<String>,
    /// Metric shared by both families.
    #[arg(long)]
    pub metric: Option<String>,
    #[arg(long)]
    pub metric_a: Option<String>,
    #[arg(long)]
    pub metric_b: Option<String>,
    #[arg(long)]
    pub family_a: String,
    #[arg(long)]
    pub family_b: String,
    #[arg(long, default_value_t = scalelaw::DEFAULT_R2_THRESHOLD)]
    pub r2_threshold: f64,
    #[command(flatten)]
    pub target: TargetArgs,
    #[arg(long, requires = "actual_b")]
    pub actual_a: Option<f64>,
    #[arg(long, requires = "actual_a")]
    pub actual_b: Option<f64>,
    #[command(flatten)]
    pub boot: BootArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct FlopsArgs {
    #[arg(long, conflicts_with = "input", requires = "tokens")]
    pub params: Option<u64>,
    #[arg(long, conflicts_with = "input", requires = "params")]
    pub tokens: Option<u64>,
    /// Records file; compute per scale from its token counts.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long, value_parser = parse_format)]
    pub input_format: Option<Format>,
    /// Compare the input scales against a larger model.
    #[arg(long, requires = "input", requires = "vs_hidden", conflicts_with = "vs_params")]
    pub vs_layers: Option<u32>,
    #[arg(long, requires = "vs_layers")]
    pub vs_hidden: Option<u32>,
    #[arg(long, requires = "input")]
    pub vs_params: Option<u64>,
    /// Tokens seen by the larger model; switches to per-model token accounting.
    #[arg(long)]
    pub vs_tokens: Option<u64>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct EarlyStopArgs {
    /// Two-column CSV: step,eval_loss.
    #[arg(long)]
    pub curve: PathBuf,
    /// One or more patience values (evaluations), comma separated.
    #[arg(long, value_delimiter = ',', num_args = 1.., required = true)]
    pub patience: Vec<usize>,
    #[arg(long, default_value_t = 0.0)]
    pub min_decrease: f64,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct FitOutlierArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Depth of the scale to hold out.
    #[arg(long)]
    pub holdout_layers: u32,
    /// Width of the held-out scale when no record carries it.
    #[arg(long)]
    pub holdout_hidden: Option<u32>,
    /// Observed converged loss at the held-out scale.
    #[arg(long)]
    pub observed: f64,
    #[command(flatten)]
    pub boot: BootArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SynthArgs {
    #[arg(long, allow_negative_numbers = true)]
    pub alpha: f64,
    /// Log-space intercept of the law.
    #[arg(long, allow_negative_numbers = true)]
    pub log_c: f64,
    #[arg(long, value_parser = parse_layer_range, default_value = "1-8")]
    pub layers: LayerRange,
    #[arg(long, default_value_t = 32)]
    pub aspect_ratio: u32,
    /// Runs per scale.
    #[arg(long, default_value_t = 5)]
    pub seeds: usize,
    #[arg(long, default_value_t = 0.0)]
    pub sigma_pre: f64,
    #[arg(long, default_value_t = 0.0)]
    pub sigma_fin: f64,
    #[arg(long)]
    pub seed: u64,
    /// Noise distribution (normal, uniform).
    #[arg(long, default_value = "normal")]
    pub noise: String,
    #[arg(long, value_parser = parse_direction, default_value = "max")]
    pub direction: Direction,
    #[arg(long, default_value = "synth")]
    pub task: String,
    #[arg(long, default_value = "synth")]
    pub family: String,
    #[arg(long, default_value = "metric")]
    pub metric: String,
    /// Records output (JSONL unless the extension is .csv).
    #[arg(long)]
    pub out: PathBuf,
    /// Ground-truth sidecar; defaults to `<out>.truth.json`.
    #[arg(long)]
    pub truth: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct PlotArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long)]
    pub out: PathBuf,
    /// Draw a bootstrap confidence sleeve with this seed.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long = "B", default_value_t = scalelaw::bootstrap::DEFAULT_REPLICATES)]
    pub replicates: usize,
    #[arg(long, default_value = "hierarchical")]
    pub mode: String,
    /// Layers shown as held-out markers and excluded from the fit.
    #[arg(long, value_parser = parse_layer_range)]
    pub holdout_layers: Option<LayerRange>,
    #[arg(long, default_value_t = 50)]
    pub grid_points: usize,
    #[arg(long)]
    pub title: Option<String>,
}
