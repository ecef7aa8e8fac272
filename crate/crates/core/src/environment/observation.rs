use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::geometry::{estimate_normals, RigidTransform, Vec3, DEFAULT_NORMAL_NEIGHBORS};
use crate::plausibility::{evaluate_object, surface_distance, to_plane_frame, ObjectPlausibility, PlaneFrameScene, SceneState, SurfaceParams};
use crate::{Error, Result};

/// Signed surface distances of every object's placed target and observed source for one
/// set of estimates.
#[derive(Clone, Debug)]
pub struct DistanceCache {
    estimates: Vec<RigidTransform>,
    pub frame: PlaneFrameScene,
    /// Target-side field, critical points and verdict per object.
    pub objects: Vec<ObjectPlausibility>,
    /// Surface distance of each source point, per object.
    pub source_distances: Vec<Vec<f64>>,
}

impl DistanceCache {
    /// Errors unless the cache was computed for the scene's current estimates.
    pub fn check_fresh(&self, scene: &SceneState) -> Result<()> {
        if self.estimates.len() == scene.objects.len() && self.estimates.iter().zip(&scene.objects).all(|(a, o)| *a == o.estimate) {
            Ok(())
        } else {
            Err(Error::StaleDistances)
        }
    }
}

/// Recomputes the plane-frame scene and all surface distances once for the whole scene.
pub fn compute_distances(scene: &SceneState, epsilon: f64, params: SurfaceParams) -> Result<DistanceCache> {
    let frame = to_plane_frame(scene)?;
    let (objects, source_distances) = (0..scene.objects.len())
        .into_par_iter()
        .map(|i| {
            let target = evaluate_object(&frame, i, epsilon, params);
            let source = surface_distance(&frame.objects[i].source.points, &frame, Some(i), params).distance;
            (target, source)
        })
        .unzip();
    Ok(DistanceCache { estimates: scene.estimates(), frame, objects, source_distances })
}

/// Features per point row: normalized position, normal, normalized surface distance.
pub const POINT_FEATURES: usize = 7;
pub type PointRow = [f32; POINT_FEATURES];

/// Agent input for one object: source and target rows in the object's normalized frame.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub object_id: u32,
    pub class_id: u32,
    pub class_one_hot: Vec<f32>,
    pub source: Vec<PointRow>,
    pub target: Vec<PointRow>,
    /// Per source row; background and outlier rows are `false`.
    pub foreground: Vec<bool>,
}

impl Observation {
    /// Mean over foreground source rows; outliers do not contribute.
    pub fn pooled_source(&self) -> PointRow {
        let mut acc = [0.0f64; POINT_FEATURES];
        let mut n = 0usize;
        for (row, _) in self.source.iter().zip(&self.foreground).filter(|(_, &fg)| fg) {
            for (a, v) in acc.iter_mut().zip(row) {
                *a += *v as f64;
            }
            n += 1;
        }
        acc.map(|a| if n == 0 { 0.0 } else { (a / n as f64) as f32 })
    }
}

fn row(p: &Vec3, n: &Vec3, d: f64) -> PointRow {
    [p.x as f32, p.y as f32, p.z as f32, n.x as f32, n.y as f32, n.z as f32, d as f32]
}

/// Builds the observation of object `index` from a cache computed for the current estimates.
pub fn build_observation(scene: &SceneState, index: usize, cache: &DistanceCache, num_classes: usize) -> Result<Observation> {
    cache.check_fresh(scene)?;
    let obj = scene.objects.get(index).ok_or_else(|| Error::InvalidArgument(format!("no object {index}")))?;
    let foreground = obj.foreground();
    if !foreground.iter().any(|&f| f) {
        return Err(Error::NoForeground(index));
    }
    let model = &obj.model;
    let to_model = obj.estimate.inverse();
    let source_normals = match &obj.source.normals {
        Some(n) => n.clone(),
        None if obj.source.len() >= DEFAULT_NORMAL_NEIGHBORS => {
            estimate_normals(&obj.source, DEFAULT_NORMAL_NEIGHBORS, &Vec3::zeros())?.normals.expect("estimated normals")
        }
        None => vec![Vec3::zeros(); obj.source.len()],
    };
    let source = obj
        .source
        .points
        .iter()
        .zip(&source_normals)
        .zip(&cache.source_distances[index])
        .map(|((p, n), d)| row(&model.normalize_point(&to_model.apply(p)), &to_model.apply_vector(n), d / model.scale))
        .collect();
    let target_normals = model.target_cloud.normals.as_deref().unwrap_or(&[]);
    let target = model
        .target_cloud
        .points
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let n = target_normals.get(i).copied().unwrap_or_else(Vec3::zeros);
            row(&model.normalize_point(p), &n, cache.objects[index].field.distance[i] / model.scale)
        })
        .collect();
    let mut class_one_hot = vec![0.0; num_classes];
    if let Some(slot) = class_one_hot.get_mut(model.class_id as usize) {
        *slot = 1.0;
    }
    Ok(Observation { object_id: obj.id, class_id: model.class_id, class_one_hot, source, target, foreground })
}
