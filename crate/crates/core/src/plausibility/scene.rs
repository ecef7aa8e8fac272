use std::sync::Arc;

use crate::geometry::{KdTree, ObjectModel, PointCloud, RigidTransform, Vec3};
use crate::{Error, Result};

use super::PlaneModel;

/// One object of a scene: its model, its observed (segmented) source cloud in camera
/// coordinates, and the current pose estimate mapping model coordinates to camera.
#[derive(Clone, Debug)]
pub struct SceneObject {
    /// Instance label; source points labeled with this id are foreground.
    pub id: u32,
    pub model: Arc<ObjectModel>,
    pub source: PointCloud,
    pub estimate: RigidTransform,
}

impl SceneObject {
    /// Source foreground flags: points whose label equals the instance id.
    /// Unlabeled sources are all foreground.
    pub fn foreground(&self) -> Vec<bool> {
        match &self.source.labels {
            Some(labels) => labels.iter().map(|&l| l == self.id).collect(),
            None => vec![true; self.source.len()],
        }
    }
}

#[derive(Clone, Debug)]
pub struct SceneState {
    pub plane: Option<PlaneModel>,
    pub objects: Vec<SceneObject>,
    /// Gravity direction in the plane frame.
    pub gravity: Vec3,
}

impl SceneState {
    pub fn new(plane: Option<PlaneModel>, objects: Vec<SceneObject>) -> Self {
        Self { plane, objects, gravity: -Vec3::z() }
    }

    pub fn estimates(&self) -> Vec<RigidTransform> {
        self.objects.iter().map(|o| o.estimate).collect()
    }

    pub fn plane(&self) -> Result<&PlaneModel> {
        self.plane.as_ref().ok_or(Error::MissingPlane)
    }
}

/// An object expressed in the plane frame.
#[derive(Clone, Debug)]
pub struct PlaneFrameObject {
    /// Target cloud placed with the current estimate, with normals.
    pub target: PointCloud,
    pub source: PointCloud,
    /// Center of mass under the current estimate.
    pub com: Vec3,
    /// Model-to-plane transform.
    pub pose: RigidTransform,
    /// Canonical-frame bounding box of the model mesh.
    pub bounds: (Vec3, Vec3),
    tree: KdTree,
}

impl PlaneFrameObject {
    /// Places `model` with a model-to-plane transform; `source` must already be in the plane frame.
    pub fn from_plane_pose(model: &ObjectModel, model_to_plane: RigidTransform, source: PointCloud) -> Self {
        let target = model.target_cloud.transformed(&model_to_plane);
        let tree = KdTree::new(&target.points);
        let bounds = model.mesh.bounds();
        Self { com: model_to_plane.apply(&model.com), target, source, pose: model_to_plane, bounds, tree }
    }

    /// Whether a plane-frame point lies within the placed model's bounding box.
    pub fn in_bounds(&self, x: &Vec3) -> bool {
        let p = self.pose.inverse().apply(x);
        let (lo, hi) = &self.bounds;
        (0..3).all(|i| p[i] >= lo[i] && p[i] <= hi[i])
    }

    pub fn tree(&self) -> &KdTree {
        &self.tree
    }
}

#[derive(Clone, Debug)]
pub struct PlaneFrameScene {
    pub objects: Vec<PlaneFrameObject>,
    pub gravity: Vec3,
    pub camera_to_plane: RigidTransform,
}

/// Expresses every source (by the plane transform) and target (plane transform composed
/// with the object's estimate) in the plane frame.
pub fn to_plane_frame(scene: &SceneState) -> Result<PlaneFrameScene> {
    let camera_to_plane = scene.plane()?.camera_to_plane;
    let objects = scene
        .objects
        .iter()
        .map(|o| PlaneFrameObject::from_plane_pose(&o.model, camera_to_plane * o.estimate, o.source.transformed(&camera_to_plane)))
        .collect();
    Ok(PlaneFrameScene { objects, gravity: scene.gravity, camera_to_plane })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::primitives::box_mesh;
    use crate::geometry::Rotation;
    use crate::symmetry::SymmetryClass;

    #[test]
    fn identity_estimate_uses_plane_transform_only() {
        let model = Arc::new(ObjectModel::from_mesh(box_mesh(Vec3::new(0.1, 0.1, 0.1)), 64, 1, SymmetryClass::none(), 0, None).unwrap());
        let plane = PlaneModel::new(RigidTransform::new(Rotation::about_x(0.7), Vec3::new(0.0, 0.1, 0.6)));
        let scene = SceneState::new(
            Some(plane),
            vec![SceneObject { id: 1, model: model.clone(), source: PointCloud::default(), estimate: RigidTransform::identity() }],
        );
        let frame = to_plane_frame(&scene).unwrap();
        let expected = model.target_cloud.transformed(&plane.camera_to_plane);
        assert_eq!(frame.objects[0].target, expected);
        assert_eq!(frame.gravity, -Vec3::z());
    }

    #[test]
    fn missing_plane() {
        let scene = SceneState::new(None, vec![]);
        assert!(matches!(to_plane_frame(&scene), Err(Error::MissingPlane)));
    }
}
