pub mod evaluate;
pub mod export_il;
pub mod generate;
pub mod refine;

use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use scenefit_core::bundle::{list_bundles, SceneBundle};
use scenefit_core::environment::{ActionSpace, EnvConfig, GreedyObjective};
use scenefit_core::scoring::ScoreConfig;

use crate::error::{CliError, CliResult, DataContext};
use crate::EnvArgs;

/// Reads a JSON config; a missing file is a data error, malformed content a config error.
pub(crate) fn read_config<T: DeserializeOwned + Default>(path: Option<&Path>) -> CliResult<T> {
    let Some(path) = path else { return Ok(T::default()) };
    let text = fs::read_to_string(path).data_ctx(format!("reading {}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| CliError::config(format!("{}: {e}", path.display())))
}

pub(crate) fn thread_pool(workers: usize) -> CliResult<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new().num_threads(workers).build().map_err(CliError::config)
}

pub(crate) fn create_dir(path: &Path) -> CliResult<()> {
    fs::create_dir_all(path).data_ctx(format!("creating {}", path.display()))
}

/// Scene bundles below `root`, keyed by directory name.
pub(crate) fn scene_dirs(root: &Path) -> CliResult<Vec<(String, PathBuf)>> {
    let dirs = list_bundles(root).data_ctx(format!("listing {}", root.display()))?;
    if dirs.is_empty() {
        return Err(CliError::data(format!("no scene bundles found in {}", root.display())));
    }
    Ok(dirs
        .into_iter()
        .map(|d| (d.file_name().map_or_else(|| "scene".into(), |n| n.to_string_lossy().into_owned()), d))
        .collect())
}

pub(crate) fn load_bundle(dir: &Path) -> CliResult<SceneBundle> {
    SceneBundle::load(dir).data_ctx(format!("loading bundle {}", dir.display()))
}

/// Refinement configuration file contents.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RefineConfig {
    pub env: EnvConfig,
    pub score: ScoreConfig,
    pub objective: GreedyObjective,
}

/// Applies flag overrides to the config file and validates the result.
pub(crate) fn resolve_refine_config(args: &EnvArgs) -> CliResult<RefineConfig> {
    let mut cfg: RefineConfig = read_config(args.config.as_deref())?;
    if let Some(seed) = args.seed {
        cfg.env.seed = seed;
    }
    if let Some(n) = args.iterations {
        cfg.env.iterations = n;
    }
    if let Some(e) = args.epsilon {
        cfg.env.epsilon = e;
    }
    if let Some(steps) = &args.steps {
        cfg.env.steps = ActionSpace::new(steps).map_err(|e| CliError::config(format!("--steps: {e}")))?;
    }
    let tau_d = args.tau_d.unwrap_or(cfg.score.tau_d);
    let tau_n = args.tau_n.unwrap_or(cfg.score.tau_n);
    cfg.score = ScoreConfig::new(tau_d, tau_n).map_err(|e| CliError::config(format!("score: {e}")))?;
    cfg.env.validate().map_err(|e| CliError::config(format!("env: {e}")))?;
    Ok(cfg)
}

pub(crate) fn write_json<T: Serialize>(value: &T, path: &Path) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value).data_ctx("serializing output")?;
    text.push('\n');
    fs::write(path, text).data_ctx(format!("writing {}", path.display()))
}

pub(crate) fn read_json<T: DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = fs::read_to_string(path).data_ctx(format!("reading {}", path.display()))?;
    serde_json::from_str(&text).data_ctx(format!("parsing {}", path.display()))
}
