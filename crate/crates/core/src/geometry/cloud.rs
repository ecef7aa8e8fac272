use serde::{Deserialize, Serialize};

use super::{KdTree, RigidTransform, Vec3};
use crate::{Error, Result};

/// A point set with optional per-point unit normals and integer labels.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PointCloud {
    pub points: Vec<Vec3>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub normals: Option<Vec<Vec3>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<u32>>,
}

impl PointCloud {
    pub fn from_points(points: Vec<Vec3>) -> Self {
        Self { points, normals: None, labels: None }
    }

    /// Checked constructor: per-point arrays must match in length and normals must be unit.
    pub fn new(points: Vec<Vec3>, normals: Option<Vec<Vec3>>, labels: Option<Vec<u32>>) -> Result<Self> {
        let cloud = Self { points, normals, labels };
        cloud.validate()?;
        Ok(cloud)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.points.len();
        if let Some(normals) = &self.normals {
            if normals.len() != n {
                return Err(Error::InvalidArgument(format!("{} normals for {n} points", normals.len())));
            }
            if let Some(bad) = normals.iter().position(|v| (v.norm() - 1.0).abs() > 1e-6) {
                return Err(Error::InvalidArgument(format!("normal {bad} is not unit length")));
            }
        }
        if let Some(labels) = &self.labels {
            if labels.len() != n {
                return Err(Error::InvalidArgument(format!("{} labels for {n} points", labels.len())));
            }
        }
        if self.points.iter().any(|p| !p.iter().all(|v| v.is_finite())) {
            return Err(Error::InvalidArgument("non-finite point".into()));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn centroid(&self) -> Option<Vec3> {
        if self.is_empty() {
            return None;
        }
        Some(self.points.iter().sum::<Vec3>() / self.len() as f64)
    }

    /// Points and normals mapped through `t`; labels carried over.
    pub fn transformed(&self, t: &RigidTransform) -> Self {
        Self {
            points: self.points.iter().map(|p| t.apply(p)).collect(),
            normals: self.normals.as_ref().map(|ns| ns.iter().map(|n| t.apply_vector(n)).collect()),
            labels: self.labels.clone(),
        }
    }

    /// Keeps the points whose index passes `keep`.
    pub fn filtered(&self, mut keep: impl FnMut(usize) -> bool) -> Self {
        let idx: Vec<usize> = (0..self.len()).filter(|&i| keep(i)).collect();
        self.select(&idx)
    }

    pub fn select(&self, idx: &[usize]) -> Self {
        Self {
            points: idx.iter().map(|&i| self.points[i]).collect(),
            normals: self.normals.as_ref().map(|ns| idx.iter().map(|&i| ns[i]).collect()),
            labels: self.labels.as_ref().map(|ls| idx.iter().map(|&i| ls[i]).collect()),
        }
    }

    pub fn kd_tree(&self) -> KdTree {
        KdTree::new(&self.points)
    }
}

/// Exact k nearest neighbours of `query` in `cloud`, ascending by distance.
pub fn knn(query: &Vec3, cloud: &PointCloud, k: usize) -> Result<Vec<(usize, f64)>> {
    if cloud.is_empty() {
        return Err(Error::EmptyCloud);
    }
    if k > cloud.len() {
        return Err(Error::NotEnoughPoints { needed: k, got: cloud.len() });
    }
    Ok(cloud.kd_tree().knn(query, k))
}

/// Symmetric Chamfer distance: mean nearest distance from `a` into `b` plus from `b` into `a`.
pub fn chamfer_distance(a: &PointCloud, b: &PointCloud) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptyCloud);
    }
    Ok(ChamferIndex::new(&a.points, &b.points).distance(&RigidTransform::identity()))
}

fn mean_nearest(tree: &KdTree, queries: impl Iterator<Item = Vec3>, n: usize) -> f64 {
    queries.map(|q| tree.nearest(&q).map_or(0.0, |(_, d)| d)).sum::<f64>() / n as f64
}

/// Pre-built indices for evaluating the Chamfer distance between a fixed set `a`
/// and a rigidly moving set `b` many times.
#[derive(Clone, Debug)]
pub struct ChamferIndex {
    a: Vec<Vec3>,
    b: Vec<Vec3>,
    a_tree: KdTree,
    b_tree: KdTree,
}

impl ChamferIndex {
    pub fn new(a: &[Vec3], b: &[Vec3]) -> Self {
        Self { a: a.to_vec(), b: b.to_vec(), a_tree: KdTree::new(a), b_tree: KdTree::new(b) }
    }

    /// Chamfer distance between `a` and `b` moved by `b_pose`.
    pub fn distance(&self, b_pose: &RigidTransform) -> f64 {
        if self.a.is_empty() || self.b.is_empty() {
            return f64::INFINITY;
        }
        let inv = b_pose.inverse();
        let a_to_b = mean_nearest(&self.b_tree, self.a.iter().map(|p| inv.apply(p)), self.a.len());
        let b_to_a = mean_nearest(&self.a_tree, self.b.iter().map(|p| b_pose.apply(p)), self.b.len());
        a_to_b + b_to_a
    }

    /// One-sided variant: mean nearest distance from `a` into the moved `b`.
    pub fn one_sided(&self, b_pose: &RigidTransform) -> f64 {
        if self.a.is_empty() || self.b.is_empty() {
            return f64::INFINITY;
        }
        let inv = b_pose.inverse();
        mean_nearest(&self.b_tree, self.a.iter().map(|p| inv.apply(p)), self.a.len())
    }
}
