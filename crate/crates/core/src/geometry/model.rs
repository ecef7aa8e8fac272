use serde::{Deserialize, Serialize};

use super::{sample_mesh_surface, PointCloud, TriangleMesh, Vec3};
use crate::symmetry::SymmetryClass;
use crate::{Error, Result};

/// An object in its canonical frame (major symmetry axis on z) together with the
/// sampled target cloud and the constants of the normalized representation.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ObjectModel {
    pub mesh: TriangleMesh,
    pub target_cloud: PointCloud,
    /// Centroid of the target cloud.
    pub centroid: Vec3,
    /// Largest distance from `centroid` to any target point (meters).
    pub scale: f64,
    /// Largest vertex-to-vertex distance (meters).
    pub diameter: f64,
    pub symmetry: SymmetryClass,
    /// Center of mass in the canonical frame.
    pub com: Vec3,
    pub class_id: u32,
}

impl ObjectModel {
    /// Samples `n_points` target points and derives the normalization constants.
    /// The center of mass defaults to the mesh volume centroid.
    pub fn from_mesh(
        mesh: TriangleMesh,
        n_points: usize,
        seed: u64,
        symmetry: SymmetryClass,
        class_id: u32,
        com: Option<Vec3>,
    ) -> Result<Self> {
        let mut target_cloud = sample_mesh_surface(&mesh, n_points, seed)?;
        target_cloud.labels = None;
        let centroid = target_cloud.centroid().ok_or(Error::EmptyCloud)?;
        let scale = target_cloud.points.iter().map(|p| (p - centroid).norm()).fold(0.0, f64::max);
        let diameter = mesh.diameter();
        if !(scale > 0.0 && diameter > 0.0) {
            return Err(Error::DegenerateModel(format!("scale {scale}, diameter {diameter}")));
        }
        let com = com.unwrap_or_else(|| mesh.center_of_mass());
        Ok(Self { mesh, target_cloud, centroid, scale, diameter, symmetry, com, class_id })
    }

    /// Maps a canonical-frame point into the normalized frame.
    pub fn normalize_point(&self, p: &Vec3) -> Vec3 {
        (p - self.centroid) / self.scale
    }

    pub fn denormalize_point(&self, p: &Vec3) -> Vec3 {
        p * self.scale + self.centroid
    }
}

fn shift_scale(cloud: &PointCloud, shift: &Vec3, scale: f64) -> PointCloud {
    PointCloud {
        points: cloud.points.iter().map(|p| (p - shift) / scale).collect(),
        normals: cloud.normals.clone(),
        labels: cloud.labels.clone(),
    }
}

/// Normalizes `source` and the model's target cloud by the target centroid and
/// maximal target radius; returns `(source', target')`.
pub fn normalize_pair(source: &PointCloud, model: &ObjectModel) -> Result<(PointCloud, PointCloud)> {
    if !(model.scale > 0.0) || !model.scale.is_finite() {
        return Err(Error::DegenerateModel(format!("normalization scale {}", model.scale)));
    }
    Ok((
        shift_scale(source, &model.centroid, model.scale),
        shift_scale(&model.target_cloud, &model.centroid, model.scale),
    ))
}

/// Inverse of the normalization applied by [`normalize_pair`].
pub fn denormalize_points(cloud: &PointCloud, model: &ObjectModel) -> PointCloud {
    PointCloud {
        points: cloud.points.iter().map(|p| model.denormalize_point(p)).collect(),
        normals: cloud.normals.clone(),
        labels: cloud.labels.clone(),
    }
}
