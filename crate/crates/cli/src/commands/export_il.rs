use std::path::Path;

use rayon::prelude::*;

use scenefit_core::environment::{export_il_dataset, refine_scene, ExpertPolicy, Trajectory};

use super::{load_bundle, resolve_refine_config, scene_dirs, thread_pool, RefineConfig};
use crate::error::{CliError, CliResult, DataContext};
use crate::manifest::RunManifest;
use crate::ExportIlArgs;

/// Expert rollouts of one bundle with recorded observations.
fn expert_rollouts(name: &str, dir: &Path, cfg: &RefineConfig) -> CliResult<Vec<Trajectory>> {
    let bundle = load_bundle(dir)?;
    let mut episode = bundle.episode(cfg.score).data_ctx(format!("scene {name}"))?;
    if episode.gt.is_empty() {
        return Err(CliError::data(format!("scene {name}: the expert needs ground-truth poses")));
    }
    let policy = ExpertPolicy::new(&episode.scene, episode.gt.clone()).data_ctx(format!("scene {name}"))?;
    let mut env = cfg.env.clone();
    env.record_observations = true;
    refine_scene(&mut episode.scene, &policy, &env, Some(&episode.gt), None).data_ctx(format!("scene {name}"))
}

/// Manifest path written next to the dataset file.
pub fn manifest_path(out: &Path) -> std::path::PathBuf {
    let mut name = out.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".manifest.json");
    out.with_file_name(name)
}

pub fn run(args: &ExportIlArgs) -> CliResult<RunManifest> {
    if args.episodes == 0 {
        return Err(CliError::config("--episodes must be positive"));
    }
    let cfg = resolve_refine_config(&args.env)?;
    let mut config = serde_json::to_value(&cfg).data_ctx("serializing config")?;
    config["episodes"] = args.episodes.into();
    let mut manifest = RunManifest::new("export-il", config, cfg.env.seed);
    let scenes = scene_dirs(&args.scenes)?;
    let pool = thread_pool(args.env.workers)?;
    let mut trajectories = manifest.time("rollout", || -> CliResult<Vec<Trajectory>> {
        let mut out = Vec::with_capacity(args.episodes);
        // Scenes are rolled out in batches so only as many as needed are processed.
        let batch = pool.current_num_threads().max(1);
        for chunk in scenes.chunks(batch) {
            if out.len() >= args.episodes {
                break;
            }
            let rolled = pool.install(|| chunk.par_iter().map(|(name, dir)| expert_rollouts(name, dir, &cfg)).collect::<CliResult<Vec<_>>>())?;
            out.extend(rolled.into_iter().flatten());
        }
        Ok(out)
    })?;
    if trajectories.len() < args.episodes {
        return Err(CliError::data(format!(
            "{} trajectories requested but the scenes hold only {} objects",
            args.episodes,
            trajectories.len()
        )));
    }
    trajectories.truncate(args.episodes);
    if let Some(parent) = args.out.parent().filter(|p| !p.as_os_str().is_empty()) {
        super::create_dir(parent)?;
    }
    let header = manifest
        .time("export", || export_il_dataset(&trajectories, &cfg.env.steps, cfg.env.num_classes, &args.out))
        .data_ctx(format!("writing {}", args.out.display()))?;
    log::info!("exported {} episodes, {} records", header.episodes, header.records);
    let root = args.out.parent().unwrap_or(Path::new(""));
    manifest.add_output(root, &args.out);
    manifest.write_atomic(&manifest_path(&args.out))?;
    Ok(manifest)
}
