//! Shared fixtures for the benchmarks.

use scenefit_core::datagen::{generate_scene, make_episode, render_observation, AugmentationConfig, Episode, ScenarioConfig};
use scenefit_core::scoring::{CameraIntrinsics, ScoreConfig};

/// A degraded multi-object episode on a 320x240 camera.
pub fn episode(objects: usize, seed: u64) -> Episode {
    let mut cfg = ScenarioConfig { objects: [objects, objects], depth_noise: 0.002, ..Default::default() };
    cfg.camera.intrinsics = CameraIntrinsics { fx: 300.0, fy: 300.0, cx: 160.0, cy: 120.0, width: 320, height: 240 };
    let generated = generate_scene(&cfg, seed).expect("scene generation");
    let observation = render_observation(&generated, cfg.depth_noise, seed).expect("rendering");
    let aug = AugmentationConfig { rotation_max_deg: 30.0, translation_max: 0.3, ..Default::default() };
    make_episode(&generated, &observation, &aug, ScoreConfig::default(), seed).expect("episode")
}
