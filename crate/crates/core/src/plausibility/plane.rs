use nalgebra::{Matrix3, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::geometry::{PointCloud, RigidTransform, Rotation, Vec3};
use crate::{Error, Result};

pub const DEFAULT_RANSAC_ITERATIONS: usize = 256;
pub const DEFAULT_INLIER_THRESHOLD: f64 = 0.005;

/// The support plane. `camera_to_plane` maps camera coordinates into the plane frame,
/// whose origin lies on the plane and whose `z` axis is the outward plane normal.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlaneModel {
    pub camera_to_plane: RigidTransform,
    #[serde(default)]
    pub inlier_count: usize,
}

impl PlaneModel {
    pub fn new(camera_to_plane: RigidTransform) -> Self {
        Self { camera_to_plane, inlier_count: 0 }
    }

    /// Builds the plane frame from a point on the plane and its normal, both in camera
    /// coordinates. The in-plane `x` axis is chosen deterministically from the normal.
    pub fn from_point_normal(point: &Vec3, normal: &Vec3) -> Self {
        let z = normal.normalize();
        let helper = [Vec3::x(), Vec3::y(), Vec3::z()]
            .into_iter()
            .min_by(|a, b| a.dot(&z).abs().total_cmp(&b.dot(&z).abs()))
            .unwrap();
        let x = (helper - z * helper.dot(&z)).normalize();
        let y = z.cross(&x);
        let plane_to_camera = Rotation::from_matrix_projected(Matrix3::from_columns(&[x, y, z]));
        Self::new(RigidTransform::new(plane_to_camera, *point).inverse())
    }

    /// Plane pose in the camera (plane frame -> camera).
    pub fn plane_to_camera(&self) -> RigidTransform {
        self.camera_to_plane.inverse()
    }

    pub fn normal_in_camera(&self) -> Vec3 {
        self.plane_to_camera().rotation.axis(2)
    }

    pub fn origin_in_camera(&self) -> Vec3 {
        self.plane_to_camera().translation
    }

    /// Signed height of a camera-frame point above the plane.
    pub fn height(&self, camera_point: &Vec3) -> f64 {
        self.camera_to_plane.apply(camera_point).z
    }
}

fn fit_least_squares(points: &[Vec3]) -> (Vec3, Vec3, [f64; 3]) {
    let centroid = points.iter().sum::<Vec3>() / points.len() as f64;
    let mut cov = Matrix3::zeros();
    for p in points {
        let d = p - centroid;
        cov += d * d.transpose();
    }
    let eig = SymmetricEigen::new(cov / points.len() as f64);
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let normal = eig.eigenvectors.column(order[0]).normalize();
    (centroid, normal, order.map(|i| eig.eigenvalues[i]))
}

/// RANSAC plane fit over background points (camera frame) with a least-squares refit on
/// the inliers. The normal is oriented toward the camera origin.
pub fn fit_plane_ransac(background: &PointCloud, iterations: usize, inlier_threshold: f64, seed: u64) -> Result<PlaneModel> {
    let pts = &background.points;
    if pts.len() < 3 {
        return Err(Error::NotEnoughPoints { needed: 3, got: pts.len() });
    }
    let (_, _, spread) = fit_least_squares(pts);
    if spread[1] <= 1e-12 * spread[2].max(f64::MIN_POSITIVE) {
        return Err(Error::DegeneratePoints("background points are collinear or coincident".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scale = spread[2].sqrt();
    let mut best: Option<(usize, Vec3, Vec3)> = None;
    for _ in 0..iterations.max(1) {
        let i = rng.random_range(0..pts.len());
        let j = rng.random_range(0..pts.len());
        let k = rng.random_range(0..pts.len());
        let n = (pts[j] - pts[i]).cross(&(pts[k] - pts[i]));
        if n.norm() <= 1e-9 * scale * scale {
            continue;
        }
        let n = n.normalize();
        let count = pts.iter().filter(|p| n.dot(&(*p - pts[i])).abs() <= inlier_threshold).count();
        if best.as_ref().is_none_or(|b| count > b.0) {
            best = Some((count, pts[i], n));
        }
    }
    let (_, p0, n0) = best.ok_or_else(|| Error::DegeneratePoints("no non-degenerate sample found".into()))?;
    let inliers: Vec<Vec3> = pts.iter().filter(|p| n0.dot(&(*p - p0)).abs() <= inlier_threshold).copied().collect();
    let (mut origin, mut normal) = (p0, n0);
    if inliers.len() >= 3 {
        let (c, n, _) = fit_least_squares(&inliers);
        origin = c;
        normal = n;
    }
    if normal.dot(&(-origin)) < 0.0 {
        normal = -normal;
    }
    let inlier_count = pts.iter().filter(|p| normal.dot(&(*p - origin)).abs() <= inlier_threshold).count();
    let mut plane = PlaneModel::from_point_normal(&origin, &normal);
    plane.inlier_count = inlier_count;
    Ok(plane)
}
