//! The `scenefit` command line: scene generation, refinement, evaluation and imitation
//! export as reproducible runs.

pub mod commands;
mod error;
mod manifest;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

pub use error::{CliError, CliResult};
pub use manifest::{RunManifest, StageTiming, MANIFEST_FILE};

/// Environment variable selecting the log level (`error`, `warn`, `info`, `debug`, `trace`).
pub const LOG_ENV: &str = "SCENEFIT_LOG";

#[derive(Debug, Parser)]
#[command(name = "scenefit", version, about = "Scene-level object pose refinement")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate synthetic scene bundles.
    Generate(GenerateArgs),
    /// Refine the initial estimates of scene bundles.
    Refine(RefineArgs),
    /// Evaluate refined poses against ground truth.
    Evaluate(EvaluateArgs),
    /// Roll out the expert on scene bundles and export an imitation-learning dataset.
    ExportIl(ExportIlArgs),
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// Generation config (JSON); defaults apply when omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory; one bundle per scene is written below it.
    #[arg(long)]
    pub out: PathBuf,
    /// Base seed, overriding the config.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Number of scenes, overriding the config.
    #[arg(long)]
    pub count: Option<usize>,
    /// Worker threads (0 = one per core).
    #[arg(long, default_value_t = 0)]
    pub workers: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum PolicyName {
    Expert,
    Greedy,
}

impl PolicyName {
    pub fn as_str(self) -> &'static str {
        match self {
            PolicyName::Expert => "expert",
            PolicyName::Greedy => "greedy",
        }
    }
}

/// Refinement settings shared by `refine` and `export-il`. Flags override the config file.
#[derive(Debug, Args, Clone, Default)]
pub struct EnvArgs {
    /// Refinement config (JSON).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Environment seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Refinement iterations [default: 10].
    #[arg(long)]
    pub iterations: Option<usize>,
    /// Contact threshold in meters [default: 0.01].
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Depth tolerance of the render score in meters [default: 0.02].
    #[arg(long = "tau-d")]
    pub tau_d: Option<f64>,
    /// Normal tolerance of the render score [default: 0.7].
    #[arg(long = "tau-n")]
    pub tau_n: Option<f64>,
    /// Step sizes in normalized units [default: 0.0033,0.01,0.03,0.09,0.27].
    #[arg(long, value_delimiter = ',')]
    pub steps: Option<Vec<f64>>,
    /// Worker threads (0 = one per core).
    #[arg(long, default_value_t = 0)]
    pub workers: usize,
}

#[derive(Debug, Args)]
pub struct RefineArgs {
    /// Directory of scene bundles (or a single bundle).
    #[arg(long)]
    pub scenes: PathBuf,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t = PolicyName::Greedy)]
    pub policy: PolicyName,
    #[command(flatten)]
    pub env: EnvArgs,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum PoseChoice {
    Init,
    Best,
    Final,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Output directory of a `refine` run.
    #[arg(long)]
    pub poses: PathBuf,
    /// Scene bundles holding ground truth and models.
    #[arg(long)]
    pub scenes: PathBuf,
    /// Output directory for metrics.
    #[arg(long)]
    pub out: PathBuf,
    /// Which pose of each trajectory to evaluate.
    #[arg(long = "pose", value_enum, default_value_t = PoseChoice::Best)]
    pub pose: PoseChoice,
    /// Threshold bins of the AUC.
    #[arg(long, default_value_t = 1000)]
    pub auc_bins: usize,
}

#[derive(Debug, Args)]
pub struct ExportIlArgs {
    /// Directory of scene bundles.
    #[arg(long)]
    pub scenes: PathBuf,
    /// Output dataset file (JSON lines).
    #[arg(long)]
    pub out: PathBuf,
    /// Object trajectories to export.
    #[arg(long, default_value_t = 128)]
    pub episodes: usize,
    #[command(flatten)]
    pub env: EnvArgs,
}

/// Initializes logging from [`LOG_ENV`]; repeated calls are harmless.
pub fn init_logging() {
    let env = env_logger::Env::new().filter_or(LOG_ENV, "warn");
    let _ = env_logger::Builder::from_env(env).format_timestamp(None).try_init();
}

/// Runs a parsed command.
pub fn run(cli: Cli) -> CliResult<RunManifest> {
    match cli.command {
        Command::Generate(args) => commands::generate::run(&args),
        Command::Refine(args) => commands::refine::run(&args),
        Command::Evaluate(args) => commands::evaluate::run(&args),
        Command::ExportIl(args) => commands::export_il::run(&args),
    }
}
