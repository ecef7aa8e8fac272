use nalgebra::{Matrix3, SymmetricEigen};

use super::{KdTree, PointCloud, Vec3};
use crate::{Error, Result};

pub const DEFAULT_NORMAL_NEIGHBORS: usize = 10;

/// Per-point normals from the smallest principal axis of the k-neighbourhood covariance,
/// oriented toward `viewpoint`.
pub fn estimate_normals(cloud: &PointCloud, k: usize, viewpoint: &Vec3) -> Result<PointCloud> {
    estimate_normals_with_confidence(cloud, k, viewpoint).map(|(c, _)| c)
}

/// Like [`estimate_normals`], also returning a per-point flag that is `false` where the
/// neighbourhood covariance had rank below two and the fallback normal `+z` was used.
pub fn estimate_normals_with_confidence(cloud: &PointCloud, k: usize, viewpoint: &Vec3) -> Result<(PointCloud, Vec<bool>)> {
    if k < 3 {
        return Err(Error::InvalidArgument(format!("normal estimation needs k >= 3, got {k}")));
    }
    if cloud.len() < k {
        return Err(Error::NotEnoughPoints { needed: k, got: cloud.len() });
    }
    let tree = KdTree::new(&cloud.points);
    let mut neighbors = Vec::with_capacity(k);
    let mut normals = Vec::with_capacity(cloud.len());
    let mut confident = Vec::with_capacity(cloud.len());
    for p in &cloud.points {
        tree.knn_into(p, k, &mut neighbors);
        let mean = neighbors.iter().map(|&(i, _)| cloud.points[i]).sum::<Vec3>() / k as f64;
        let mut cov = Matrix3::zeros();
        for &(i, _) in &neighbors {
            let d = cloud.points[i] - mean;
            cov += d * d.transpose();
        }
        let eig = SymmetricEigen::new(cov / k as f64);
        let mut order = [0usize, 1, 2];
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let largest = eig.eigenvalues[order[2]];
        let middle = eig.eigenvalues[order[1]];
        let rank_ok = largest > 0.0 && middle > 1e-10 * largest;
        let mut n = if rank_ok { eig.eigenvectors.column(order[0]).normalize() } else { Vec3::z() };
        if n.dot(&(viewpoint - p)) < 0.0 {
            n = -n;
        }
        normals.push(n);
        confident.push(rank_ok);
    }
    Ok((PointCloud { points: cloud.points.clone(), normals: Some(normals), labels: cloud.labels.clone() }, confident))
}
