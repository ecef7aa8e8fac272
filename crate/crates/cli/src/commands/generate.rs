use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use scenefit_core::bundle::{PlaneFit, PlaneSpec, SceneBundle};
use scenefit_core::datagen::{generate_scene, render_observation, sample_degradation, sub_seed, AugmentationConfig, ScenarioConfig};

use super::{create_dir, read_config, thread_pool};
use crate::error::{CliError, CliResult, DataContext};
use crate::manifest::{RunManifest, MANIFEST_FILE};
use crate::GenerateArgs;

/// How the support plane stored in each bundle is obtained.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlaneSource {
    /// The exact generating plane.
    GroundTruth,
    /// The generating plane with the augmentation jitter.
    #[default]
    Jittered,
    /// RANSAC on the background pixels when the bundle is loaded.
    FitFromBackground,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenerateConfig {
    pub count: usize,
    pub seed: u64,
    pub scenario: ScenarioConfig,
    pub augmentation: AugmentationConfig,
    pub plane: PlaneSource,
}

impl Default for GenerateConfig {
    fn default() -> Self {
        Self { count: 10, seed: 0, scenario: ScenarioConfig::default(), augmentation: AugmentationConfig::default(), plane: PlaneSource::default() }
    }
}

impl GenerateConfig {
    pub fn validate(&self) -> CliResult<()> {
        if self.count == 0 {
            return Err(CliError::config("count: must be positive"));
        }
        self.scenario.validate().map_err(|e| CliError::config(format!("scenario: {e}")))?;
        self.augmentation.validate().map_err(|e| CliError::config(format!("augmentation: {e}")))?;
        Ok(())
    }
}

pub fn scene_name(index: usize) -> String {
    format!("scene_{index:04}")
}

/// Builds scene `index` of a run. Scene, observation and degradation each draw from their
/// own sub-seed of the base seed.
pub fn build_bundle(cfg: &GenerateConfig, index: usize) -> scenefit_core::Result<SceneBundle> {
    let base = sub_seed(cfg.seed, index as u64);
    let generated = generate_scene(&cfg.scenario, sub_seed(base, 0))?;
    let observation = render_observation(&generated, cfg.scenario.depth_noise, sub_seed(base, 1))?;
    let (objects, jittered) = sample_degradation(&generated, &observation, &cfg.augmentation, sub_seed(base, 2))?;
    let plane = match cfg.plane {
        PlaneSource::GroundTruth => PlaneSpec::CameraToPlane(generated.plane.camera_to_plane),
        PlaneSource::Jittered => PlaneSpec::CameraToPlane(jittered.camera_to_plane),
        PlaneSource::FitFromBackground => PlaneSpec::FitFromBackground(PlaneFit { seed: sub_seed(base, 3), ..Default::default() }),
    };
    SceneBundle::from_generated(&generated, &observation, &objects, plane, cfg.augmentation.presample)
}

pub fn run(args: &GenerateArgs) -> CliResult<RunManifest> {
    let mut cfg: GenerateConfig = read_config(args.config.as_deref())?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(count) = args.count {
        cfg.count = count;
    }
    cfg.validate()?;
    let config = serde_json::to_value(&cfg).data_ctx("serializing config")?;
    let mut manifest = RunManifest::new("generate", config, cfg.seed);
    create_dir(&args.out)?;
    let pool = thread_pool(args.workers)?;
    let written = manifest.time("generate", || {
        pool.install(|| {
            (0..cfg.count)
                .into_par_iter()
                .map(|i| {
                    let dir = args.out.join(scene_name(i));
                    let bundle = build_bundle(&cfg, i).data_ctx(format!("scene {i}"))?;
                    bundle.write(&dir).data_ctx(format!("writing {}", dir.display()))
                })
                .collect::<CliResult<Vec<_>>>()
        })
    })?;
    for path in written.iter().flatten() {
        manifest.add_output(&args.out, path);
    }
    log::info!("wrote {} scenes to {}", cfg.count, args.out.display());
    manifest.write_atomic(&args.out.join(MANIFEST_FILE))?;
    Ok(manifest)
}
