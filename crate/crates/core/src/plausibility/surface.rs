use serde::{Deserialize, Serialize};

use crate::geometry::Vec3;
use crate::{Error, Result};

use super::{PlaneFrameScene, DEFAULT_QUORUM_FRACTION, DEFAULT_QUORUM_K};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SurfaceParams {
    /// Neighbours consulted by the inside and support tests.
    pub k: usize,
    /// Fraction of the `k` neighbours that must agree.
    pub quorum: f64,
}

impl Default for SurfaceParams {
    fn default() -> Self {
        Self { k: DEFAULT_QUORUM_K, quorum: DEFAULT_QUORUM_FRACTION }
    }
}

impl SurfaceParams {
    /// Minimum number of agreeing neighbours out of `available`.
    pub fn votes_needed(&self, available: usize) -> usize {
        ((self.quorum * available as f64) - 1e-9).ceil().max(1.0) as usize
    }
}

/// Which surface produced a point's distance.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum DistanceSource {
    Plane,
    Object(usize),
}

/// Signed surface distances of a queried point set against the rest of the scene.
#[derive(Clone, Debug)]
pub struct SurfaceDistanceField {
    /// Signed distance, negative inside another surface.
    pub distance: Vec<f64>,
    /// Normal at the nearest surface point.
    pub normal: Vec<Vec3>,
    pub nearest: Vec<Vec3>,
    pub source: Vec<DistanceSource>,
    /// Normals of the `k` nearest neighbours on the winning surface, `k` per point.
    neighbor_normals: Vec<Vec3>,
    neighbor_counts: Vec<usize>,
    pub params: SurfaceParams,
}

impl SurfaceDistanceField {
    pub fn len(&self) -> usize {
        self.distance.len()
    }

    pub fn is_empty(&self) -> bool {
        self.distance.is_empty()
    }

    pub fn neighbor_normals(&self, i: usize) -> &[Vec3] {
        let k = self.params.k;
        &self.neighbor_normals[i * k..i * k + self.neighbor_counts[i]]
    }

    /// A field with given distances and nearest-surface normals, every neighbour normal
    /// equal to the nearest one. Points at `nearest = x - d n` are attributed to object 0.
    pub fn from_distances(points: &[Vec3], distance: Vec<f64>, normal: Vec<Vec3>, params: SurfaceParams) -> Result<Self> {
        if points.len() != distance.len() || points.len() != normal.len() {
            return Err(Error::ShapeMismatch(format!("{} points, {} distances, {} normals", points.len(), distance.len(), normal.len())));
        }
        let k = params.k.max(1);
        Ok(Self {
            nearest: points.iter().zip(&distance).zip(&normal).map(|((x, d), n)| x - n * *d).collect(),
            source: vec![DistanceSource::Object(0); points.len()],
            neighbor_normals: normal.iter().flat_map(|n| std::iter::repeat_n(*n, k)).collect(),
            neighbor_counts: vec![k; points.len()],
            distance,
            normal,
            params: SurfaceParams { k, quorum: params.quorum },
        })
    }
}

/// Signed distance from each plane-frame query point to the plane (its `z`) and to every
/// scene object except `exclude`, keeping the minimum. A point counts as inside an object
/// when it lies within the object's bounding box and, for a quorum of its `k` nearest
/// target points `y`, the normal at `y` points along `y - x`.
pub fn surface_distance(query: &[Vec3], scene: &PlaneFrameScene, exclude: Option<usize>, params: SurfaceParams) -> SurfaceDistanceField {
    let k = params.k.max(1);
    let n = query.len();
    let mut field = SurfaceDistanceField {
        distance: Vec::with_capacity(n),
        normal: Vec::with_capacity(n),
        nearest: Vec::with_capacity(n),
        source: Vec::with_capacity(n),
        neighbor_normals: Vec::with_capacity(n * k),
        neighbor_counts: Vec::with_capacity(n),
        params: SurfaceParams { k, quorum: params.quorum },
    };
    let mut nn = Vec::with_capacity(k);
    let mut best_normals = Vec::with_capacity(k);
    for x in query {
        let mut best_d = x.z;
        let mut best_src = DistanceSource::Plane;
        let mut best_nearest = Vec3::new(x.x, x.y, 0.0);
        let mut best_normal = Vec3::z();
        best_normals.clear();
        best_normals.resize(k, Vec3::z());

        for (j, obj) in scene.objects.iter().enumerate() {
            if Some(j) == exclude || obj.target.is_empty() {
                continue;
            }
            let normals = obj.target.normals.as_deref().expect("target clouds carry normals");
            obj.tree().knn_into(x, k, &mut nn);
            let inside_votes = nn
                .iter()
                .filter(|&&(i, _)| normals[i].dot(&(obj.target.points[i] - x)) > 0.0)
                .count();
            let (i0, d0) = nn[0];
            let inside = inside_votes >= params.votes_needed(nn.len()) && obj.in_bounds(x);
            let d = if inside { -d0 } else { d0 };
            if d < best_d {
                best_d = d;
                best_src = DistanceSource::Object(j);
                best_nearest = obj.target.points[i0];
                best_normal = normals[i0];
                best_normals.clear();
                best_normals.extend(nn.iter().map(|&(i, _)| normals[i]));
            }
        }
        field.distance.push(best_d);
        field.source.push(best_src);
        field.nearest.push(best_nearest);
        field.normal.push(best_normal);
        field.neighbor_counts.push(best_normals.len());
        field.neighbor_normals.extend(best_normals.iter().copied());
        field.neighbor_normals.resize(field.neighbor_normals.len() + (k - best_normals.len()), Vec3::zeros());
    }
    field
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::primitives::box_mesh;
    use crate::geometry::{ObjectModel, PointCloud, RigidTransform};
    use crate::plausibility::PlaneFrameObject;
    use crate::symmetry::SymmetryClass;

    fn cube_scene(center: Vec3, side: f64, n: usize) -> PlaneFrameScene {
        let model = ObjectModel::from_mesh(box_mesh(Vec3::repeat(side)), n, 7, SymmetryClass::none(), 0, None).unwrap();
        PlaneFrameScene {
            objects: vec![PlaneFrameObject::from_plane_pose(&model, RigidTransform::from_translation(center), PointCloud::default())],
            gravity: -Vec3::z(),
            camera_to_plane: RigidTransform::identity(),
        }
    }

    #[test]
    fn plane_distance_is_height() {
        let scene = PlaneFrameScene { objects: vec![], gravity: -Vec3::z(), camera_to_plane: RigidTransform::identity() };
        let f = surface_distance(&[Vec3::new(0.4, -0.2, 0.03)], &scene, None, SurfaceParams::default());
        assert_eq!(f.distance[0], 0.03);
        assert_eq!(f.normal[0], Vec3::z());
        assert_eq!(f.source[0], DistanceSource::Plane);
    }

    #[test]
    fn point_inside_cube_is_negative() {
        let scene = cube_scene(Vec3::new(0.0, 0.0, 0.5), 0.1, 8192);
        // 1 cm below the top face, well away from the edges.
        let f = surface_distance(&[Vec3::new(0.0, 0.0, 0.54)], &scene, None, SurfaceParams::default());
        assert!(f.distance[0] < 0.0);
        assert!((f.distance[0] + 0.01).abs() < 0.004, "{}", f.distance[0]);
        assert_eq!(f.source[0], DistanceSource::Object(0));
        // Same point, object excluded: the plane wins.
        let g = surface_distance(&[Vec3::new(0.0, 0.0, 0.54)], &scene, Some(0), SurfaceParams::default());
        assert_eq!(g.source[0], DistanceSource::Plane);
    }

    #[test]
    fn far_point_below_an_edge_is_outside() {
        let scene = cube_scene(Vec3::new(0.0, 0.0, 0.05), 0.1, 2048);
        // Level with the lower half, 7 cm out from the top edge region.
        let f = surface_distance(&[Vec3::new(-0.12, 0.0, 0.09)], &scene, None, SurfaceParams::default());
        assert!(f.distance[0] > 0.0, "{}", f.distance[0]);
    }

    #[test]
    fn minimum_over_plane_and_object() {
        // Cube top face at z = 0.07; query 2 cm above the plane and 1 cm beside the cube.
        let scene = cube_scene(Vec3::new(0.0, 0.0, 0.05), 0.1, 16384);
        let q = Vec3::new(0.06, 0.0, 0.02);
        let f = surface_distance(&[q], &scene, None, SurfaceParams::default());
        assert_eq!(f.source[0], DistanceSource::Object(0));
        assert!(f.distance[0] > 0.0 && (f.distance[0] - 0.01).abs() < 0.003, "{}", f.distance[0]);
        assert_eq!(f.neighbor_normals(0).len(), 5);
    }
}
