use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::environment::RenderContext;
use crate::geometry::{ObjectModel, RigidTransform};
use crate::plausibility::{PlaneModel, SceneObject, SceneState};
use crate::scoring::{CameraIntrinsics, ScoreConfig};
use crate::{Error, Result};

use super::{augment_segmentation, feasible_points, perturb_plane, perturb_pose, pixel_mask, segmentation_candidates, source_from_pixels};
use super::{AugmentationConfig, GeneratedScene, SceneObservation};

/// Per-object degradation parameters; together with the observation they determine the
/// object's source cloud and initial estimate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpisodeObject {
    /// Instance label of the object in the observation.
    pub id: u32,
    pub foreground_fraction: f64,
    /// Source points requested (reduced when the mask is too small).
    pub points: usize,
    pub segmentation_seed: u64,
    pub init_pose: RigidTransform,
}

/// A refinement-ready scene.
#[derive(Clone, Debug)]
pub struct Episode {
    pub scene: SceneState,
    pub gt: Vec<RigidTransform>,
    pub objects: Vec<EpisodeObject>,
    pub render: RenderContext,
}

/// Samples segmentation parameters, initial estimates and the jittered plane.
pub fn sample_degradation(
    generated: &GeneratedScene,
    observation: &SceneObservation,
    aug: &AugmentationConfig,
    seed: u64,
) -> Result<(Vec<EpisodeObject>, PlaneModel)> {
    aug.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let [lo, hi] = aug.foreground_fraction;
    let mut objects = Vec::with_capacity(generated.models.len());
    for (i, (model, gt)) in generated.models.iter().zip(generated.gt_poses()).enumerate() {
        let p = if hi > lo { rng.random_range(lo..=hi) } else { lo };
        let (fg, bg) = segmentation_candidates(&observation.labels, &observation.depth, (i + 1) as u16);
        let points = feasible_points(fg.len(), bg.len(), p, aug.points, aug.presample);
        let init_pose = perturb_pose(&gt, &model.centroid, model.scale, aug.rotation_max_deg.to_radians(), aug.translation_max, &mut rng);
        objects.push(EpisodeObject { id: (i + 1) as u32, foreground_fraction: p, points, segmentation_seed: rng.random(), init_pose });
    }
    let plane = perturb_plane(&generated.plane, aug.plane_rotation_max_deg.to_radians(), aug.plane_translation_max, &mut rng);
    Ok((objects, plane))
}

/// Builds sources, masks and the scene state from stored degradation parameters.
#[allow(clippy::too_many_arguments)]
pub fn assemble_episode(
    models: &[Arc<ObjectModel>],
    gt: Vec<RigidTransform>,
    observation: &SceneObservation,
    cam: &CameraIntrinsics,
    objects: Vec<EpisodeObject>,
    plane: PlaneModel,
    presample: usize,
    score: ScoreConfig,
) -> Result<Episode> {
    let mut scene_objects = Vec::with_capacity(models.len());
    let mut masks = Vec::with_capacity(models.len());
    for (model, o) in models.iter().zip(&objects) {
        let label = u16::try_from(o.id).map_err(|_| Error::InvalidArgument(format!("object id {} exceeds the 16-bit label range", o.id)))?;
        let pixels = augment_segmentation(&observation.labels, &observation.depth, label, o.foreground_fraction, o.points, presample, o.segmentation_seed)?;
        let source = source_from_pixels(&pixels, &observation.depth, Some(&observation.normals), &observation.labels, cam)?;
        masks.push(pixel_mask(cam.width, cam.height, &pixels));
        scene_objects.push(SceneObject { id: o.id, model: model.clone(), source, estimate: o.init_pose });
    }
    let render = RenderContext { cam: *cam, depth: observation.depth.clone(), normals: observation.normals.clone(), masks, score };
    Ok(Episode { scene: SceneState::new(Some(plane), scene_objects), gt, objects, render })
}

/// Samples a degraded, refinement-ready episode of a generated scene.
pub fn make_episode(
    generated: &GeneratedScene,
    observation: &SceneObservation,
    aug: &AugmentationConfig,
    score: ScoreConfig,
    seed: u64,
) -> Result<Episode> {
    let (objects, plane) = sample_degradation(generated, observation, aug, seed)?;
    assemble_episode(&generated.models, generated.gt_poses(), observation, &generated.cam, objects, plane, aug.presample, score)
}
