use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use nalgebra::Matrix3;

use crate::geometry::{compose, rotation_angle, sample_mesh_surface, ChamferIndex, KdTree, ObjectModel, RigidTransform, Rotation, Vec3};
use crate::plausibility::{SceneObject, SceneState};
use crate::symmetry::{enumerate_symmetries, SymmetrySet};
use crate::{Error, Result};

use super::{apply_action, build_observation, expert_action, Action, ActionSpace, DistanceCache, Observation};

/// What a policy sees when choosing the action of one object.
pub struct PolicyContext<'a> {
    pub scene: &'a SceneState,
    pub distances: &'a DistanceCache,
    pub space: &'a ActionSpace,
    pub num_classes: usize,
}

pub trait Policy: Sync {
    fn act(&self, ctx: &PolicyContext<'_>, index: usize) -> Result<Action>;
}

/// Symmetry-aware oracle using the ground-truth poses.
#[derive(Clone, Debug)]
pub struct ExpertPolicy {
    gt: Vec<RigidTransform>,
    syms: Vec<SymmetrySet>,
}

impl ExpertPolicy {
    pub fn new(scene: &SceneState, gt: Vec<RigidTransform>) -> Result<Self> {
        if gt.len() != scene.objects.len() {
            return Err(Error::ShapeMismatch(format!("{} ground-truth poses for {} objects", gt.len(), scene.objects.len())));
        }
        let syms = scene.objects.iter().map(|o| enumerate_symmetries(&o.model.symmetry)).collect();
        Ok(Self { gt, syms })
    }
}

impl Policy for ExpertPolicy {
    fn act(&self, ctx: &PolicyContext<'_>, index: usize) -> Result<Action> {
        let obj = &ctx.scene.objects[index];
        Ok(expert_action(&self.gt[index], &obj.estimate, &self.syms[index], ctx.space, &obj.model))
    }
}

/// Alignment objective minimized by the greedy lookahead.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GreedyObjective {
    /// Symmetric Chamfer distance against the model target.
    Symmetric,
    /// Mean distance from foreground source points to the densely sampled model surface.
    SourceToTarget,
    /// Source-to-target plus a penalty for camera-facing model points lying in front of
    /// the observed depth along their pixel ray.
    #[default]
    FreeSpace,
}

/// Surface samples backing the one-sided objective; the model target is too sparse to
/// resolve millimeter offsets.
pub const DENSE_TARGET_POINTS: usize = 8192;
/// Upper bound on source and target points entering the lookahead objective.
pub const FIT_POINTS: usize = 512;
/// Rays within this multiple of the median ray spacing count as observed.
const RAY_RADIUS_FACTOR: f64 = 1.5;
/// A model point violates free space only if every one of these nearest rays sees past it.
const RAY_NEIGHBORS: usize = 4;
const ICP_ITERATIONS: usize = 30;
const ICP_CONVERGED: f64 = 1e-7;

/// Symmetric Chamfer index between an object's foreground source and its model target.
pub fn foreground_chamfer(obj: &SceneObject) -> Result<ChamferIndex> {
    Ok(ChamferIndex::new(&foreground_points(obj)?, &obj.model.target_cloud.points))
}

fn foreground_points(obj: &SceneObject) -> Result<Vec<Vec3>> {
    let fg = obj.foreground();
    let source: Vec<Vec3> = obj.source.points.iter().zip(&fg).filter(|(_, &f)| f).map(|(p, _)| *p).collect();
    if source.is_empty() {
        return Err(Error::NoForeground(obj.id as usize));
    }
    Ok(source)
}

fn strided<T: Copy>(items: &[T], cap: usize) -> Vec<T> {
    if items.len() <= cap {
        return items.to_vec();
    }
    (0..cap).map(|i| items[i * items.len() / cap]).collect()
}

fn median_spacing(tree: &KdTree, points: &[Vec3]) -> f64 {
    let mut d: Vec<f64> = points.iter().filter_map(|p| tree.knn(p, 2).get(1).map(|&(_, d)| d)).collect();
    if d.is_empty() {
        return 0.0;
    }
    let mid = d.len() / 2;
    *d.select_nth_unstable_by(mid, f64::total_cmp).1
}

/// Fixed-source alignment evaluator for one object.
pub struct AlignmentIndex {
    chamfer: ChamferIndex,
    source: Vec<Vec3>,
    dense: Vec<Vec3>,
    dense_tree: KdTree,
    fit_source: Vec<Vec3>,
    fit_target: Vec<Vec3>,
    fit_normals: Vec<Vec3>,
    /// Every source point (foreground or not) as an image-plane ray `(x/z, y/z, 0)`.
    rays: KdTree,
    ray_depth: Vec<f64>,
    ray_radius: f64,
}

impl AlignmentIndex {
    /// Indexes the object's source against its model.
    pub fn new(obj: &SceneObject) -> Result<Self> {
        let source = foreground_points(obj)?;
        let target = &obj.model.target_cloud.points;
        let normals = obj.model.target_cloud.normals.clone().unwrap_or_else(|| vec![Vec3::zeros(); target.len()]);
        let dense = sample_mesh_surface(&obj.model.mesh, DENSE_TARGET_POINTS, u64::from(obj.id))?.points;
        let observed: Vec<&Vec3> = obj.source.points.iter().filter(|p| p.z > 0.0).collect();
        let ray_points: Vec<Vec3> = observed.iter().map(|p| Vec3::new(p.x / p.z, p.y / p.z, 0.0)).collect();
        let rays = KdTree::new(&ray_points);
        Ok(Self {
            chamfer: ChamferIndex::new(&source, target),
            fit_source: strided(&source, FIT_POINTS),
            fit_target: strided(target, FIT_POINTS),
            fit_normals: strided(&normals, FIT_POINTS),
            dense_tree: KdTree::new(&dense),
            dense,
            source,
            ray_radius: RAY_RADIUS_FACTOR * median_spacing(&rays, &ray_points),
            ray_depth: observed.iter().map(|p| p.z).collect(),
            rays,
        })
    }

    /// Symmetric Chamfer distance between the source and the target placed by `pose`.
    pub fn chamfer(&self, pose: &RigidTransform) -> f64 {
        self.chamfer.distance(pose)
    }

    pub fn objective(&self, pose: &RigidTransform, objective: GreedyObjective) -> f64 {
        match objective {
            GreedyObjective::Symmetric => self.chamfer.distance(pose),
            GreedyObjective::SourceToTarget => self.one_sided(pose),
            GreedyObjective::FreeSpace => self.one_sided(pose) + self.free_space_violation(pose),
        }
    }

    /// Mean distance from the source into the densely sampled model surface placed by `pose`.
    pub fn one_sided(&self, pose: &RigidTransform) -> f64 {
        let inv = pose.inverse();
        let sum: f64 = self.fit_source.iter().map(|p| self.dense_tree.nearest(&inv.apply(p)).map_or(0.0, |(_, d)| d)).sum();
        sum / self.fit_source.len() as f64
    }

    /// Mean over camera-facing target points of how far each lies in front of the observed
    /// depth on its ray; points whose ray was not observed contribute zero.
    pub fn free_space_violation(&self, pose: &RigidTransform) -> f64 {
        if self.ray_depth.is_empty() {
            return 0.0;
        }
        let mut sum = 0.0;
        let mut facing = 0usize;
        let mut near = Vec::with_capacity(RAY_NEIGHBORS);
        for (y, ny) in self.fit_target.iter().zip(&self.fit_normals) {
            let p = pose.apply(y);
            if p.z <= 0.0 || pose.apply_vector(ny).dot(&p) >= 0.0 {
                continue;
            }
            facing += 1;
            self.rays.knn_into(&Vec3::new(p.x / p.z, p.y / p.z, 0.0), RAY_NEIGHBORS, &mut near);
            if near.len() == RAY_NEIGHBORS && near.iter().all(|&(_, d)| d <= self.ray_radius) {
                sum += near.iter().map(|&(j, _)| (self.ray_depth[j] - p.z).max(0.0)).fold(f64::INFINITY, f64::min);
            }
        }
        if facing == 0 {
            0.0
        } else {
            sum / facing as f64
        }
    }

    /// Point-to-point ICP of the model surface onto the foreground source, from `init`.
    pub fn register(&self, init: &RigidTransform) -> RigidTransform {
        let mut pose = *init;
        for _ in 0..ICP_ITERATIONS {
            let inv = pose.inverse();
            let pairs: Vec<(Vec3, Vec3)> =
                self.source.iter().filter_map(|s| self.dense_tree.nearest(&inv.apply(s)).map(|(j, _)| (self.dense[j], *s))).collect();
            let n = pairs.len() as f64;
            let cm = pairs.iter().fold(Vec3::zeros(), |acc, p| acc + p.0) / n;
            let cs = pairs.iter().fold(Vec3::zeros(), |acc, p| acc + p.1) / n;
            let h = pairs.iter().fold(Matrix3::zeros(), |acc, (m, s)| acc + (s - cs) * (m - cm).transpose());
            let r = Rotation::from_matrix_projected(h);
            let next = RigidTransform::new(r, cs - r.rotate(&cm));
            let step = compose(&next, &pose.inverse());
            pose = next;
            if rotation_angle(&step.rotation) < ICP_CONVERGED && step.translation.norm() < ICP_CONVERGED {
                break;
            }
        }
        pose
    }

    pub fn source_len(&self) -> usize {
        self.source.len()
    }
}

/// One sweep of coordinate descent over the action indices, translation axes first: each
/// axis takes the step minimizing the objective of the joint action chosen so far, keeping
/// zero unless a step strictly improves.
pub fn coordinate_action(
    estimate: &RigidTransform,
    model: &ObjectModel,
    index: &AlignmentIndex,
    space: &ActionSpace,
    objective: GreedyObjective,
) -> (Action, f64) {
    let mut chosen = [0i32; 6];
    let mut best_value = index.objective(estimate, objective);
    for axis in [3, 4, 5, 0, 1, 2] {
        let mut best = 0;
        for k in 1..=space.max_index() {
            for step in [k, -k] {
                let mut idx = chosen;
                idx[axis] = step;
                let value = index.objective(&apply_action(estimate, &Action::from_indices(idx), space, model), objective);
                if value < best_value {
                    best = step;
                    best_value = value;
                }
            }
        }
        chosen[axis] = best;
    }
    (Action::from_indices(chosen), best_value)
}

/// One-step lookahead without ground truth. Two candidate actions are scored: the
/// coordinate-descent action and the floor-rule action towards an ICP registration of the
/// source. The one with the lower objective wins; stop if neither improves.
pub fn greedy_action(obj: &SceneObject, index: &AlignmentIndex, space: &ActionSpace, objective: GreedyObjective) -> Action {
    let (descent, descent_value) = coordinate_action(&obj.estimate, &obj.model, index, space, objective);
    let registered = index.register(&obj.estimate);
    let toward = expert_action(&registered, &obj.estimate, &SymmetrySet::identity(), space, &obj.model);
    let toward_value = index.objective(&apply_action(&obj.estimate, &toward, space, &obj.model), objective);
    if toward_value < descent_value {
        toward
    } else {
        descent
    }
}

/// Ground-truth-free baseline policy built on [`greedy_action`].
pub struct GreedyPolicy {
    pub objective: GreedyObjective,
    indices: Vec<AlignmentIndex>,
    /// Last estimate and chosen action per object; the action depends on nothing else.
    memo: Vec<Mutex<Option<(RigidTransform, Action)>>>,
}

impl GreedyPolicy {
    pub fn new(scene: &SceneState, objective: GreedyObjective) -> Result<Self> {
        let indices: Vec<AlignmentIndex> = scene.objects.iter().map(AlignmentIndex::new).collect::<Result<_>>()?;
        let memo = indices.iter().map(|_| Mutex::new(None)).collect();
        Ok(Self { objective, indices, memo })
    }
}

impl Policy for GreedyPolicy {
    fn act(&self, ctx: &PolicyContext<'_>, index: usize) -> Result<Action> {
        let obj = &ctx.scene.objects[index];
        let mut memo = self.memo[index].lock().unwrap_or_else(|e| e.into_inner());
        if let Some((pose, action)) = *memo {
            if pose == obj.estimate {
                return Ok(action);
            }
        }
        let action = greedy_action(obj, &self.indices[index], ctx.space, self.objective);
        *memo = Some((obj.estimate, action));
        Ok(action)
    }
}

/// Adapter for an externally supplied (for example learned) agent.
pub struct CallbackPolicy<F>(pub F);

impl<F> Policy for CallbackPolicy<F>
where
    F: Fn(&Observation) -> Action + Sync,
{
    fn act(&self, ctx: &PolicyContext<'_>, index: usize) -> Result<Action> {
        let obs = build_observation(ctx.scene, index, ctx.distances, ctx.num_classes)?;
        let action = (self.0)(&obs);
        action.validate(ctx.space)?;
        Ok(action)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::primitives::box_mesh;
    use crate::environment::{from_normalized, to_normalized};
    use crate::geometry::{PointCloud, Rotation};
    use crate::symmetry::SymmetryClass;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};
    use std::sync::Arc;

    fn object(source_pose: RigidTransform, estimate: RigidTransform, noise: f64, partial: bool, seed: u64) -> SceneObject {
        let model = Arc::new(ObjectModel::from_mesh(box_mesh(Vec3::new(0.12, 0.08, 0.06)), 512, 9, SymmetryClass::none(), 1, None).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0, noise.max(1e-300)).unwrap();
        let pts: Vec<Vec3> = model
            .target_cloud
            .points
            .iter()
            .zip(model.target_cloud.normals.as_ref().unwrap())
            .filter(|(p, n)| !partial || source_pose.apply_vector(n).dot(&source_pose.apply(p)) < 0.0)
            .map(|(p, _)| {
                let q = source_pose.apply(p);
                if noise > 0.0 {
                    q + Vec3::new(normal.sample(&mut rng), normal.sample(&mut rng), normal.sample(&mut rng))
                } else {
                    q
                }
            })
            .collect();
        SceneObject { id: 1, model, source: PointCloud::from_points(pts), estimate }
    }

    fn gt() -> RigidTransform {
        RigidTransform::new(Rotation::from_euler_xyz(2.4, 0.2, 0.7), Vec3::new(0.02, 0.01, 0.8))
    }

    #[test]
    fn aligned_source_stops() {
        let obj = object(gt(), gt(), 0.0, false, 1);
        let idx = AlignmentIndex::new(&obj).unwrap();
        assert!(greedy_action(&obj, &idx, &ActionSpace::default(), GreedyObjective::Symmetric).is_stop());
    }

    #[test]
    fn exact_offset_is_corrected() {
        let obj0 = object(gt(), gt(), 0.0, false, 1);
        let n = to_normalized(&gt(), &obj0.model);
        let est = from_normalized(&RigidTransform::new(n.rotation, n.translation + Vec3::new(0.03, 0.0, 0.0)), &obj0.model);
        let obj = SceneObject { estimate: est, ..obj0 };
        let idx = AlignmentIndex::new(&obj).unwrap();
        let a = greedy_action(&obj, &idx, &ActionSpace::default(), GreedyObjective::Symmetric);
        assert_eq!(a.trans[0], -3, "{a:?}");
    }

    #[test]
    fn partial_view_offset_is_corrected_by_every_objective() {
        let base = object(gt(), gt(), 0.0, true, 3);
        let n = to_normalized(&gt(), &base.model);
        let est = from_normalized(&RigidTransform::new(n.rotation, n.translation + Vec3::new(0.0, 0.03, 0.0)), &base.model);
        let obj = SceneObject { estimate: est, ..base };
        let idx = AlignmentIndex::new(&obj).unwrap();
        for objective in [GreedyObjective::SourceToTarget, GreedyObjective::FreeSpace] {
            let a = greedy_action(&obj, &idx, &ActionSpace::default(), objective);
            assert_eq!(a.trans[1], -3, "{objective:?} {a:?}");
            assert!(idx.objective(&apply_action(&est, &a, &ActionSpace::default(), &obj.model), objective) < idx.objective(&est, objective));
        }
        let at_gt = SceneObject { estimate: gt(), ..object(gt(), gt(), 0.0, true, 3) };
        let idx = AlignmentIndex::new(&at_gt).unwrap();
        assert!(idx.free_space_violation(&gt()) < 1e-9);
    }

    #[test]
    fn registration_recovers_moderate_offsets() {
        let base = object(gt(), gt(), 0.001, true, 5);
        let est = compose(&RigidTransform::new(Rotation::from_euler_xyz(0.1, -0.05, 0.08), Vec3::new(0.005, -0.004, 0.006)), &gt());
        let obj = SceneObject { estimate: est, ..base };
        let idx = AlignmentIndex::new(&obj).unwrap();
        let r = idx.register(&est);
        assert!(rotation_angle(&(r.rotation * gt().rotation.transpose())) < 0.02);
        assert!((r.translation - gt().translation).norm() < 0.003);
    }

    #[test]
    fn memoized_policy_matches_direct_action() {
        use crate::plausibility::PlaneModel;
        let obj = object(gt(), compose(&RigidTransform::from_translation(Vec3::new(0.01, 0.0, 0.0)), &gt()), 0.0, true, 7);
        let direct = greedy_action(&obj, &AlignmentIndex::new(&obj).unwrap(), &ActionSpace::default(), GreedyObjective::FreeSpace);
        let scene = SceneState::new(Some(PlaneModel::new(RigidTransform::identity())), vec![obj]);
        let policy = GreedyPolicy::new(&scene, GreedyObjective::FreeSpace).unwrap();
        let cache = crate::environment::compute_distances(&scene, 0.01, Default::default()).unwrap();
        let ctx = PolicyContext { scene: &scene, distances: &cache, space: &ActionSpace::default(), num_classes: 4 };
        assert_eq!(policy.act(&ctx, 0).unwrap(), direct);
        assert_eq!(policy.act(&ctx, 0).unwrap(), direct);
    }

    #[test]
    fn non_worsening_on_small_offsets() {
        let space = ActionSpace::default();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut worse = 0;
        for trial in 0..100 {
            let base = object(gt(), gt(), 0.002, true, trial);
            let n = to_normalized(&gt(), &base.model);
            let dt = Vec3::new(rng.random_range(-0.05..0.05), rng.random_range(-0.05..0.05), rng.random_range(-0.05..0.05));
            let dr = Rotation::from_euler_xyz(rng.random_range(-0.05..0.05), rng.random_range(-0.05..0.05), rng.random_range(-0.05..0.05));
            let est = from_normalized(&RigidTransform::new(dr * n.rotation, n.translation + dt), &base.model);
            let obj = SceneObject { estimate: est, ..base };
            let idx = AlignmentIndex::new(&obj).unwrap();
            for objective in [GreedyObjective::Symmetric, GreedyObjective::SourceToTarget, GreedyObjective::FreeSpace] {
                let a = greedy_action(&obj, &idx, &space, objective);
                let next = apply_action(&obj.estimate, &a, &space, &obj.model);
                if idx.objective(&next, objective) > idx.objective(&obj.estimate, objective) {
                    worse += 1;
                }
            }
        }
        assert_eq!(worse, 0);
    }
}
