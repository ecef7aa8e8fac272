use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::geometry::{RigidTransform, Rotation, Vec3};
use crate::plausibility::PlaneModel;

/// Uniformly distributed unit vector.
pub fn random_unit_vector<R: Rng + ?Sized>(rng: &mut R) -> Vec3 {
    loop {
        let v = Vec3::new(StandardNormal.sample(rng), StandardNormal.sample(rng), StandardNormal.sample(rng));
        let n = v.norm();
        if n > 1e-12 {
            return v / n;
        }
    }
}

/// Rotates `pose` about a uniformly random axis through `pivot` (a model-frame point) by
/// an angle uniform in `[0, max_rotation]` radians, then translates it along a uniformly
/// random direction by a magnitude uniform in `[0, max_translation] * scale`.
pub fn perturb_pose<R: Rng + ?Sized>(
    pose: &RigidTransform,
    pivot: &Vec3,
    scale: f64,
    max_rotation: f64,
    max_translation: f64,
    rng: &mut R,
) -> RigidTransform {
    let axis = random_unit_vector(rng);
    let angle = if max_rotation > 0.0 { rng.random_range(0.0..=max_rotation) } else { 0.0 };
    let dir = random_unit_vector(rng);
    let mag = if max_translation > 0.0 { rng.random_range(0.0..=max_translation) } else { 0.0 };
    let (rotation, base) = if angle > 0.0 {
        let rotation = Rotation::from_axis_angle(&axis, angle) * pose.rotation;
        (rotation, pose.apply(pivot) - rotation.rotate(pivot))
    } else {
        (pose.rotation, pose.translation)
    };
    RigidTransform::new(rotation, base + dir * (mag * scale))
}

/// Jitters the plane's pose in the camera frame about the plane origin.
pub fn perturb_plane<R: Rng + ?Sized>(plane: &PlaneModel, max_rotation: f64, max_translation: f64, rng: &mut R) -> PlaneModel {
    let original = plane.plane_to_camera();
    let to_camera = perturb_pose(&original, &Vec3::zeros(), 1.0, max_rotation, max_translation, rng);
    if to_camera == original {
        return *plane;
    }
    PlaneModel { camera_to_plane: to_camera.inverse(), inlier_count: plane.inlier_count }
}
