use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use scenefit_core::environment::{refine_scene, write_trajectories_csv, ExpertPolicy, GreedyPolicy, Policy, Trajectory};
use scenefit_core::geometry::RigidTransform;
use scenefit_core::metrics::add_distance;

use super::{create_dir, load_bundle, resolve_refine_config, scene_dirs, thread_pool, write_json, RefineConfig};
use crate::error::{CliError, CliResult, DataContext};
use crate::manifest::{RunManifest, MANIFEST_FILE};
use crate::{PolicyName, RefineArgs};

pub const TRAJECTORIES_FILE: &str = "trajectories.csv";
pub const POSES_FILE: &str = "poses.json";
pub const SUMMARY_FILE: &str = "summary.json";

/// Refinement result of one object.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObjectPoses {
    pub id: u32,
    pub class_id: u32,
    pub init_pose: RigidTransform,
    /// Trajectory index of the best-scoring pose; 0 is the initial estimate.
    pub best_iteration: usize,
    pub best_pose: RigidTransform,
    pub final_pose: RigidTransform,
    /// Render score of every trajectory pose, initial estimate first.
    pub scores: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub add: Option<AddErrors>,
}

/// ADD in meters of the initial, best and final poses.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AddErrors {
    pub init: f64,
    pub best: f64,
    pub r#final: f64,
}

/// Contents of a scene's `poses.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenePoses {
    pub scene: String,
    pub policy: String,
    pub objects: Vec<ObjectPoses>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RefineSummary {
    pub policy: String,
    pub scenes: usize,
    pub objects: usize,
    /// Objects with ground truth.
    pub evaluated: usize,
    /// Fraction of evaluated objects whose best pose has lower ADD than the initial estimate.
    pub improvement_rate: Option<f64>,
    /// Same for the final pose.
    pub final_improvement_rate: Option<f64>,
    pub mean_init_add: Option<f64>,
    pub mean_best_add: Option<f64>,
    pub mean_final_add: Option<f64>,
}

fn object_poses(t: &Trajectory, model_points: &scenefit_core::PointCloud) -> CliResult<ObjectPoses> {
    let (best_iteration, best_pose) = t.best_pose();
    let final_pose = t.final_pose();
    let add = match &t.gt_pose {
        Some(gt) => {
            let d = |p: &RigidTransform| add_distance(model_points, gt, p).data_ctx("ADD");
            Some(AddErrors { init: d(&t.init_pose)?, best: d(&best_pose)?, r#final: d(&final_pose)? })
        }
        None => None,
    };
    Ok(ObjectPoses {
        id: t.object_id,
        class_id: t.class_id,
        init_pose: t.init_pose,
        best_iteration,
        best_pose,
        final_pose,
        scores: t.scores().unwrap_or_default(),
        add,
    })
}

/// Refines one bundle and writes its trajectory CSV and pose JSON into `out`.
pub fn refine_bundle(name: &str, bundle_dir: &Path, out: &Path, policy: PolicyName, cfg: &RefineConfig) -> CliResult<(ScenePoses, Vec<PathBuf>)> {
    let bundle = load_bundle(bundle_dir)?;
    let mut episode = bundle.episode(cfg.score).data_ctx(format!("scene {name}"))?;
    let gt = (!episode.gt.is_empty()).then_some(episode.gt.as_slice());
    let policy_impl: Box<dyn Policy> = match policy {
        PolicyName::Expert => {
            let gt = gt.ok_or_else(|| CliError::data(format!("scene {name}: the expert policy needs ground-truth poses")))?;
            Box::new(ExpertPolicy::new(&episode.scene, gt.to_vec()).data_ctx(format!("scene {name}"))?)
        }
        PolicyName::Greedy => Box::new(GreedyPolicy::new(&episode.scene, cfg.objective).data_ctx(format!("scene {name}"))?),
    };
    let trajectories =
        refine_scene(&mut episode.scene, policy_impl.as_ref(), &cfg.env, gt, Some(&episode.render)).data_ctx(format!("scene {name}"))?;

    let objects = trajectories
        .iter()
        .map(|t| object_poses(t, &episode.scene.objects[t.object_index].model.target_cloud))
        .collect::<CliResult<Vec<_>>>()?;
    let poses = ScenePoses { scene: name.into(), policy: policy.as_str().into(), objects };

    create_dir(out)?;
    let csv_path = out.join(TRAJECTORIES_FILE);
    let file = File::create(&csv_path).data_ctx(format!("creating {}", csv_path.display()))?;
    let mut writer = BufWriter::new(file);
    write_trajectories_csv(&trajectories, &mut writer).data_ctx(format!("writing {}", csv_path.display()))?;
    writer.flush().data_ctx(format!("writing {}", csv_path.display()))?;
    let poses_path = out.join(POSES_FILE);
    write_json(&poses, &poses_path)?;
    Ok((poses, vec![csv_path, poses_path]))
}

fn mean(v: &[f64]) -> Option<f64> {
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

pub fn summarize(policy: PolicyName, scenes: &[ScenePoses]) -> RefineSummary {
    let objects: Vec<&ObjectPoses> = scenes.iter().flat_map(|s| &s.objects).collect();
    let errors: Vec<AddErrors> = objects.iter().filter_map(|o| o.add).collect();
    let rate = |f: fn(&AddErrors) -> bool| mean(&errors.iter().map(|e| f(e) as u8 as f64).collect::<Vec<_>>());
    RefineSummary {
        policy: policy.as_str().into(),
        scenes: scenes.len(),
        objects: objects.len(),
        evaluated: errors.len(),
        improvement_rate: rate(|e| e.best < e.init),
        final_improvement_rate: rate(|e| e.r#final < e.init),
        mean_init_add: mean(&errors.iter().map(|e| e.init).collect::<Vec<_>>()),
        mean_best_add: mean(&errors.iter().map(|e| e.best).collect::<Vec<_>>()),
        mean_final_add: mean(&errors.iter().map(|e| e.r#final).collect::<Vec<_>>()),
    }
}

pub fn run(args: &RefineArgs) -> CliResult<RunManifest> {
    let cfg = resolve_refine_config(&args.env)?;
    let mut config = serde_json::to_value(&cfg).data_ctx("serializing config")?;
    config["policy"] = args.policy.as_str().into();
    let mut manifest = RunManifest::new("refine", config, cfg.env.seed);
    let scenes = manifest.time("discover", || scene_dirs(&args.scenes))?;
    create_dir(&args.out)?;
    let pool = thread_pool(args.env.workers)?;
    let results = manifest.time("refine", || {
        pool.install(|| {
            scenes
                .par_iter()
                .map(|(name, dir)| refine_bundle(name, dir, &args.out.join(name), args.policy, &cfg))
                .collect::<CliResult<Vec<_>>>()
        })
    })?;
    let mut poses = Vec::with_capacity(results.len());
    for (p, paths) in results {
        for path in &paths {
            manifest.add_output(&args.out, path);
        }
        poses.push(p);
    }
    let summary = summarize(args.policy, &poses);
    let summary_path = args.out.join(SUMMARY_FILE);
    write_json(&summary, &summary_path)?;
    manifest.add_output(&args.out, &summary_path);
    if let Some(rate) = summary.improvement_rate {
        log::info!("ADD improved for {:.1}% of {} objects", 100.0 * rate, summary.evaluated);
    }
    manifest.write_atomic(&args.out.join(MANIFEST_FILE))?;
    Ok(manifest)
}
