use std::collections::BTreeSet;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use scenefit_core::metrics::{summarize, write_records_csv, EvalRecord};

use super::refine::{ScenePoses, POSES_FILE};
use super::{create_dir, load_bundle, read_json, write_json};
use crate::error::{CliError, CliResult, DataContext};
use crate::manifest::{RunManifest, MANIFEST_FILE};
use crate::{EvaluateArgs, PoseChoice};

pub const METRICS_CSV: &str = "metrics.csv";
pub const METRICS_JSON: &str = "metrics.json";

/// Scene pose files below a refine output directory, sorted by scene directory.
fn pose_files(root: &Path) -> CliResult<Vec<PathBuf>> {
    if root.join(POSES_FILE).is_file() {
        return Ok(vec![root.join(POSES_FILE)]);
    }
    let mut files = Vec::new();
    for entry in fs::read_dir(root).data_ctx(format!("listing {}", root.display()))? {
        let path = entry.data_ctx(format!("listing {}", root.display()))?.path().join(POSES_FILE);
        if path.is_file() {
            files.push(path);
        }
    }
    files.sort();
    if files.is_empty() {
        return Err(CliError::data(format!("no {POSES_FILE} found in {}", root.display())));
    }
    Ok(files)
}

/// Evaluation records of one scene; the pose and ground-truth object ids must agree.
pub fn evaluate_scene(poses: &ScenePoses, bundle_dir: &Path, choice: PoseChoice) -> CliResult<Vec<EvalRecord>> {
    let bundle = load_bundle(bundle_dir)?;
    let scene = &poses.scene;
    let estimated: BTreeSet<u32> = poses.objects.iter().map(|o| o.id).collect();
    let truth: BTreeSet<u32> = bundle.manifest.objects.iter().map(|o| o.id).collect();
    if estimated != truth || estimated.len() != poses.objects.len() {
        return Err(CliError::data(format!("scene {scene}: object ids {estimated:?} do not match ground truth ids {truth:?}")));
    }
    let models = bundle.models().data_ctx(format!("scene {scene}"))?;
    poses
        .objects
        .iter()
        .map(|o| {
            let k = bundle.manifest.objects.iter().position(|b| b.id == o.id).expect("ids checked");
            let gt = bundle.manifest.objects[k]
                .gt_pose
                .ok_or_else(|| CliError::data(format!("scene {scene}: object {} has no ground-truth pose", o.id)))?;
            let est = match choice {
                PoseChoice::Init => o.init_pose,
                PoseChoice::Best => o.best_pose,
                PoseChoice::Final => o.final_pose,
            };
            let m = &models[k];
            EvalRecord::compute(scene.clone(), o.id as usize, m.class_id, &m.target_cloud, m.diameter, m.symmetry.is_symmetric(), &gt, &est)
                .data_ctx(format!("scene {scene}"))
        })
        .collect()
}

pub fn run(args: &EvaluateArgs) -> CliResult<RunManifest> {
    if args.auc_bins == 0 {
        return Err(CliError::config("--auc-bins must be positive"));
    }
    let choice = match args.pose {
        PoseChoice::Init => "init",
        PoseChoice::Best => "best",
        PoseChoice::Final => "final",
    };
    let config = serde_json::json!({ "pose": choice, "auc_bins": args.auc_bins });
    let mut manifest = RunManifest::new("evaluate", config, 0);
    let records = manifest.time("evaluate", || -> CliResult<Vec<EvalRecord>> {
        let mut records = Vec::new();
        for path in pose_files(&args.poses)? {
            let poses: ScenePoses = read_json(&path)?;
            records.extend(evaluate_scene(&poses, &args.scenes.join(&poses.scene), args.pose)?);
        }
        Ok(records)
    })?;
    let summary = summarize(&records, args.auc_bins).data_ctx("summarizing")?;
    create_dir(&args.out)?;
    let csv_path = args.out.join(METRICS_CSV);
    let file = File::create(&csv_path).data_ctx(format!("creating {}", csv_path.display()))?;
    let mut writer = BufWriter::new(file);
    write_records_csv(&records, &mut writer).data_ctx(format!("writing {}", csv_path.display()))?;
    writer.flush().data_ctx(format!("writing {}", csv_path.display()))?;
    let json_path = args.out.join(METRICS_JSON);
    write_json(&summary, &json_path)?;
    manifest.add_output(&args.out, &csv_path);
    manifest.add_output(&args.out, &json_path);
    manifest.write_atomic(&args.out.join(MANIFEST_FILE))?;
    Ok(manifest)
}
