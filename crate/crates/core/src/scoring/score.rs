use serde::{Deserialize, Serialize};

use crate::geometry::{RigidTransform, TriangleMesh};
use crate::{Error, Result};

use super::{render, CameraIntrinsics, DepthImage, Mask, NormalImage};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoreConfig {
    /// Depth error (meters) at which the depth term reaches zero.
    pub tau_d: f64,
    /// Cosine deficit at which the normal term reaches zero.
    pub tau_n: f64,
}

impl Default for ScoreConfig {
    fn default() -> Self {
        Self { tau_d: 0.02, tau_n: 0.7 }
    }
}

impl ScoreConfig {
    pub fn new(tau_d: f64, tau_n: f64) -> Result<Self> {
        if !(tau_d > 0.0 && tau_n > 0.0) {
            return Err(Error::InvalidArgument(format!("score thresholds must be positive, got tau_d={tau_d} tau_n={tau_n}")));
        }
        Ok(Self { tau_d, tau_n })
    }
}

/// Per-pixel agreement in `[0, 1]` between two hits.
pub fn pixel_score(d_a: f64, n_a: &crate::Vec3, d_b: f64, n_b: &crate::Vec3, cfg: &ScoreConfig) -> f64 {
    let e_d = 1.0 - ((d_a - d_b).abs() / cfg.tau_d).min(1.0);
    let cos = n_a.dot(n_b).clamp(0.0, 1.0);
    let e_n = 1.0 - ((1.0 - cos) / cfg.tau_n).min(1.0);
    0.5 * (e_d + e_n)
}

/// Mean per-pixel agreement over pixels where either image has depth, restricted to
/// `mask`. Pixels covered by only one image score zero; an empty domain scores zero.
pub fn score_pose(
    rendered: (&DepthImage, &NormalImage),
    observed: (&DepthImage, &NormalImage),
    mask: Option<&Mask>,
    cfg: &ScoreConfig,
) -> Result<f64> {
    let (rd, rn) = rendered;
    let (od, on) = observed;
    if !rd.same_shape(rn) || !rd.same_shape(od) || !rd.same_shape(on) || mask.is_some_and(|m| !rd.same_shape(m)) {
        return Err(Error::ShapeMismatch("rendered, observed and mask images differ in size".into()));
    }
    let mut sum = 0.0;
    let mut count = 0usize;
    for idx in 0..rd.len() {
        if mask.is_some_and(|m| !m.data()[idx]) {
            continue;
        }
        let (a, b) = (rd.data()[idx], od.data()[idx]);
        match (a > 0.0, b > 0.0) {
            (false, false) => continue,
            (true, true) => sum += pixel_score(a, &rn.data()[idx], b, &on.data()[idx], cfg),
            _ => {}
        }
        count += 1;
    }
    Ok(if count == 0 { 0.0 } else { sum / count as f64 })
}

/// Index of the best score; ties go to the latest entry.
pub fn best_index(scores: &[f64]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, &s) in scores.iter().enumerate() {
        if best.is_none_or(|b| s >= scores[b]) {
            best = Some(i);
        }
    }
    best
}

/// Scores every pose of a trajectory (initial pose first) against the observation and
/// returns the best iteration, its pose and all scores.
pub fn select_best_pose(
    poses: &[RigidTransform],
    mesh: &TriangleMesh,
    cam: &CameraIntrinsics,
    observed: (&DepthImage, &NormalImage),
    mask: Option<&Mask>,
    cfg: &ScoreConfig,
) -> Result<(usize, RigidTransform, Vec<f64>)> {
    if poses.is_empty() {
        return Err(Error::InvalidArgument("trajectory has no poses".into()));
    }
    let scores = poses
        .iter()
        .map(|pose| {
            let (d, n) = render(mesh, pose, cam)?;
            score_pose((&d, &n), observed, mask, cfg)
        })
        .collect::<Result<Vec<_>>>()?;
    let best = best_index(&scores).expect("non-empty");
    Ok((best, poses[best], scores))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::primitives::box_mesh;
    use crate::geometry::{Rotation, Vec3};
    use crate::scoring::Image;

    fn flat(depth: f64, w: usize, h: usize) -> (DepthImage, NormalImage) {
        (Image::new(w, h, depth), Image::new(w, h, Vec3::new(0.0, 0.0, -1.0)))
    }

    fn score(a: &(DepthImage, NormalImage), b: &(DepthImage, NormalImage), mask: Option<&Mask>) -> f64 {
        score_pose((&a.0, &a.1), (&b.0, &b.1), mask, &ScoreConfig::default()).unwrap()
    }

    #[test]
    fn identical_images_score_one() {
        let a = flat(1.0, 8, 6);
        assert_eq!(score(&a, &a, None), 1.0);
    }

    #[test]
    fn depth_beyond_tau_scores_half() {
        assert_eq!(score(&flat(1.0, 8, 6), &flat(1.02, 8, 6), None), 0.5);
        assert_eq!(score(&flat(1.0, 8, 6), &flat(1.5, 8, 6), None), 0.5);
    }

    #[test]
    fn half_tau_scores_three_quarters() {
        assert!((score(&flat(1.0, 8, 6), &flat(1.01, 8, 6), None) - 0.75).abs() < 1e-12);
    }

    #[test]
    fn one_sided_pixels_score_zero() {
        let a = flat(1.0, 4, 1);
        let mut b = flat(1.0, 4, 1);
        b.0.set(0, 0, 0.0);
        assert!((score(&a, &b, None) - 0.75).abs() < 1e-12);
        let empty = flat(0.0, 4, 1);
        assert_eq!(score(&empty, &empty, None), 0.0);
    }

    #[test]
    fn mask_restricts_domain() {
        let a = flat(1.0, 4, 1);
        let mut b = flat(1.0, 4, 1);
        b.0.set(0, 0, 2.0);
        let mask = Image::from_vec(4, 1, vec![false, true, true, true]).unwrap();
        assert_eq!(score(&a, &b, Some(&mask)), 1.0);
        assert!(score_pose((&a.0, &a.1), (&b.0, &b.1), Some(&Image::new(3, 1, true)), &ScoreConfig::default()).is_err());
    }

    #[test]
    fn opposing_normals_clamped() {
        let a = flat(1.0, 2, 2);
        let mut b = flat(1.0, 2, 2);
        b.1 = Image::new(2, 2, Vec3::new(0.0, 0.0, 1.0));
        assert_eq!(score(&a, &b, None), 0.5);
    }

    #[test]
    fn non_increasing_in_depth_offset() {
        let mut prev = f64::INFINITY;
        for k in 0..=30 {
            let s = score(&flat(1.0, 3, 3), &flat(1.0 + 0.001 * k as f64, 3, 3), None);
            assert!(s <= prev + 1e-15);
            prev = s;
        }
        assert_eq!(prev, 0.5);
    }

    #[test]
    fn best_index_prefers_latest_tie() {
        assert_eq!(best_index(&[0.2, 0.9, 0.9, 0.1]), Some(2));
        assert_eq!(best_index(&[0.4]), Some(0));
        assert_eq!(best_index(&[]), None);
    }

    fn cam() -> CameraIntrinsics {
        CameraIntrinsics::new(300.0, 300.0, 80.0, 60.0, 160, 120).unwrap()
    }

    #[test]
    fn selection_skips_overshoot() {
        let mesh = box_mesh(Vec3::new(0.1, 0.06, 0.04));
        let gt = RigidTransform::new(Rotation::from_euler_xyz(0.3, -0.2, 0.5), Vec3::new(0.0, 0.0, 0.7));
        let (d, n) = render(&mesh, &gt, &cam()).unwrap();
        let off = |dx: f64| RigidTransform::new(gt.rotation, gt.translation + Vec3::new(dx, 0.0, 0.0));
        let poses = [off(0.04), off(0.02), off(0.004), off(-0.015)];
        let (best, pose, scores) = select_best_pose(&poses, &mesh, &cam(), (&d, &n), None, &ScoreConfig::default()).unwrap();
        assert_eq!(best, 2, "{scores:?}");
        assert_eq!(pose, poses[2]);
        let (best, _, _) = select_best_pose(&poses[..1], &mesh, &cam(), (&d, &n), None, &ScoreConfig::default()).unwrap();
        assert_eq!(best, 0);
    }
}
