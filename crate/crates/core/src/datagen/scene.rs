use std::f64::consts::TAU;
use std::sync::Arc;

use nalgebra::Matrix3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::geometry::{ObjectModel, PointCloud, RigidTransform, Rotation, TriangleMesh, Vec3};
use crate::plausibility::{evaluate_object, surface_distance, PlaneFrameObject, PlaneFrameScene, PlaneModel, SurfaceParams, DEFAULT_EPSILON};
use crate::scoring::{CameraIntrinsics, DepthImage, LabelImage, NormalImage, Rasterizer};
use crate::{Error, Result};

use super::primitives::{Primitive, PrimitiveKind};
use super::ScenarioConfig;

/// Penetration tolerated while dropping an object onto its support (meters).
const DROP_TOLERANCE: f64 = DEFAULT_EPSILON / 4.0;
const DROP_SCAN_STEP: f64 = 0.005;
/// Required clearance to every object other than the support, in multiples of epsilon.
const CLEARANCE_EPSILONS: f64 = 3.0;
const CAMERA_ATTEMPTS: usize = 50;

/// A synthetic scene with ground truth.
#[derive(Clone, Debug)]
pub struct GeneratedScene {
    pub seed: u64,
    pub primitives: Vec<Primitive>,
    pub models: Vec<Arc<ObjectModel>>,
    /// Seed each model's target cloud was sampled with.
    pub model_seeds: Vec<u64>,
    /// Model-to-plane placement of every object.
    pub placements: Vec<RigidTransform>,
    /// Object each one rests on; `None` for the plane.
    pub supports: Vec<Option<usize>>,
    /// Ground-truth plane.
    pub plane: PlaneModel,
    pub cam: CameraIntrinsics,
    pub plane_extent: f64,
}

impl GeneratedScene {
    /// Ground-truth model-to-camera poses.
    pub fn gt_poses(&self) -> Vec<RigidTransform> {
        let to_camera = self.plane.plane_to_camera();
        self.placements.iter().map(|p| to_camera * *p).collect()
    }

    /// Plane-frame scene with every object at its ground-truth placement.
    pub fn plane_frame(&self) -> PlaneFrameScene {
        PlaneFrameScene {
            objects: self
                .models
                .iter()
                .zip(&self.placements)
                .map(|(m, p)| PlaneFrameObject::from_plane_pose(m, *p, PointCloud::default()))
                .collect(),
            gravity: -Vec3::z(),
            camera_to_plane: self.plane.camera_to_plane,
        }
    }

    /// Objects with nothing resting on them.
    pub fn is_top(&self, index: usize) -> bool {
        !self.supports.contains(&Some(index))
    }
}

/// Derives a per-item seed from a base seed.
pub fn sub_seed(base: u64, index: u64) -> u64 {
    // SplitMix64 finalizer.
    let mut z = base.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn sample_primitive(kind: PrimitiveKind, rng: &mut ChaCha8Rng) -> Primitive {
    match kind {
        PrimitiveKind::Box => Primitive::Box { size: [rng.random_range(0.04..0.12), rng.random_range(0.04..0.12), rng.random_range(0.04..0.12)] },
        PrimitiveKind::Cylinder => Primitive::Cylinder { radius: rng.random_range(0.025..0.05), height: rng.random_range(0.05..0.14) },
        PrimitiveKind::LShape => {
            let thickness = rng.random_range(0.015..0.025);
            Primitive::LShape {
                length: rng.random_range(0.08..0.14),
                width: rng.random_range(0.04..0.08),
                height: rng.random_range(0.06..0.12),
                thickness,
            }
        }
    }
}

/// Horizontal radius that bounds the primitive's footprint.
fn footprint_radius(p: &Primitive) -> f64 {
    match *p {
        Primitive::Box { size } => 0.5 * (size[0] * size[0] + size[1] * size[1]).sqrt(),
        Primitive::Cylinder { radius, .. } => radius,
        Primitive::LShape { length, width, .. } => 0.5 * (length * length + width * width).sqrt(),
    }
}

/// Half-size of a support's top face usable for stacking.
fn top_half_extent(p: &Primitive) -> Option<f64> {
    match *p {
        Primitive::Box { size } => Some(0.5 * size[0].min(size[1])),
        Primitive::Cylinder { radius, .. } => Some(radius / std::f64::consts::SQRT_2),
        Primitive::LShape { .. } => None,
    }
}

fn min_distance(points: &[Vec3], scene: &PlaneFrameScene, height: f64) -> f64 {
    let shifted: Vec<Vec3> = points.iter().map(|p| p + Vec3::new(0.0, 0.0, height)).collect();
    surface_distance(&shifted, scene, None, SurfaceParams::default()).distance.into_iter().fold(f64::INFINITY, f64::min)
}

/// Lowest height at which the object does not penetrate the plane or any placed object:
/// a coarse downward scan followed by bisection at the first blocked height.
fn drop_height(points: &[Vec3], scene: &PlaneFrameScene, rest_on_plane: f64, start: f64) -> f64 {
    let free = |z: f64| min_distance(points, scene, z) >= -DROP_TOLERANCE;
    let mut hi = start;
    let mut lo;
    loop {
        lo = hi - DROP_SCAN_STEP;
        if lo <= rest_on_plane {
            if free(rest_on_plane) {
                return rest_on_plane;
            }
            lo = rest_on_plane;
            break;
        }
        if !free(lo) {
            break;
        }
        hi = lo;
    }
    for _ in 0..24 {
        let mid = 0.5 * (lo + hi);
        if free(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

fn all_stable(scene: &PlaneFrameScene) -> bool {
    (0..scene.objects.len()).all(|i| evaluate_object(scene, i, DEFAULT_EPSILON, SurfaceParams::default()).verdict.stable)
}

fn clearance_ok(candidate: &[Vec3], scene: &PlaneFrameScene, support: Option<usize>) -> bool {
    let min_gap = CLEARANCE_EPSILONS * DEFAULT_EPSILON;
    scene.objects.iter().enumerate().filter(|(j, _)| Some(*j) != support).all(|(_, obj)| {
        candidate.iter().all(|p| obj.tree().nearest(p).is_none_or(|(_, d)| d >= min_gap))
    })
}

/// Camera looking at the plane origin region from above (OpenCV axes: x right, y down,
/// z forward). Returns the camera-to-plane transform.
fn sample_camera(cfg: &ScenarioConfig, rng: &mut ChaCha8Rng) -> RigidTransform {
    let c = &cfg.camera;
    let dist = rng.random_range(c.distance[0]..=c.distance[1]);
    let elev = rng.random_range(c.elevation_deg[0]..=c.elevation_deg[1]).to_radians();
    let azim = rng.random_range(0.0..TAU);
    let target = Vec3::new(rng.random_range(-1.0..=1.0), rng.random_range(-1.0..=1.0), 0.0) * c.target_jitter;
    let eye = target + dist * Vec3::new(elev.cos() * azim.cos(), elev.cos() * azim.sin(), elev.sin());
    let z = (target - eye).normalize();
    let x = z.cross(&Vec3::z()).normalize();
    let y = z.cross(&x);
    RigidTransform::new(Rotation::from_matrix_projected(Matrix3::from_columns(&[x, y, z])), eye)
}

/// Subdivided square of the plane around its origin, in the plane frame.
fn plane_mesh(extent: f64) -> TriangleMesh {
    let cells = 16usize;
    let half = extent / 2.0;
    let step = extent / cells as f64;
    let mut vertices = Vec::new();
    for j in 0..=cells {
        for i in 0..=cells {
            vertices.push(Vec3::new(-half + i as f64 * step, -half + j as f64 * step, 0.0));
        }
    }
    let row = (cells + 1) as u32;
    let mut faces = Vec::new();
    for j in 0..cells as u32 {
        for i in 0..cells as u32 {
            let a = j * row + i;
            faces.push([a, a + 1, a + row + 1]);
            faces.push([a, a + row + 1, a + row]);
        }
    }
    TriangleMesh::new(vertices, faces).expect("grid indices are valid")
}

/// Rendered observation of a scene.
#[derive(Clone, Debug)]
pub struct SceneObservation {
    /// Depth with sensor noise.
    pub depth: DepthImage,
    pub clean_depth: DepthImage,
    pub normals: NormalImage,
    /// Object `i` is labeled `i + 1`; plane and empty pixels are 0.
    pub labels: LabelImage,
}

/// Fused z-buffer render of the plane (label 0) and all objects at their ground truth,
/// with additive Gaussian depth noise on every hit pixel.
pub fn render_observation(scene: &GeneratedScene, noise: f64, seed: u64) -> Result<SceneObservation> {
    if !(noise >= 0.0) {
        return Err(Error::InvalidArgument(format!("depth noise must be non-negative, got {noise}")));
    }
    let mut r = Rasterizer::new(scene.cam);
    r.draw(&plane_mesh(4.0 * scene.plane_extent.max(0.5)), &scene.plane.plane_to_camera(), 0);
    for (i, (m, pose)) in scene.models.iter().zip(scene.gt_poses()).enumerate() {
        r.draw(&m.mesh, &pose, (i + 1) as u16);
    }
    let (clean_depth, normals, labels) = r.finish();
    let mut depth = clean_depth.clone();
    if noise > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dist = Normal::new(0.0, noise).map_err(|e| Error::InvalidArgument(e.to_string()))?;
        for z in depth.data_mut() {
            if *z > 0.0 {
                *z = (*z + dist.sample(&mut rng)).max(1e-6);
            }
        }
    }
    Ok(SceneObservation { depth, clean_depth, normals, labels })
}

fn visible_counts(scene: &GeneratedScene) -> Vec<usize> {
    let mut r = Rasterizer::new(scene.cam);
    for (i, (m, pose)) in scene.models.iter().zip(scene.gt_poses()).enumerate() {
        r.draw(&m.mesh, &pose, (i + 1) as u16);
    }
    let (_, _, labels) = r.finish();
    let mut counts = vec![0; scene.models.len()];
    for &l in labels.data() {
        if l > 0 {
            counts[l as usize - 1] += 1;
        }
    }
    counts
}

/// Places objects one by one in stable resting poses (on the plane or stacked), then
/// chooses a camera that sees every object. Deterministic per seed.
pub fn generate_scene(cfg: &ScenarioConfig, seed: u64) -> Result<GeneratedScene> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let count = rng.random_range(cfg.objects[0]..=cfg.objects[1]);
    let mut primitives: Vec<Primitive> = Vec::with_capacity(count);
    let mut models: Vec<Arc<ObjectModel>> = Vec::with_capacity(count);
    let mut model_seeds = Vec::with_capacity(count);
    let mut placements: Vec<RigidTransform> = Vec::with_capacity(count);
    let mut supports: Vec<Option<usize>> = Vec::with_capacity(count);
    let mut frame = PlaneFrameScene { objects: vec![], gravity: -Vec3::z(), camera_to_plane: RigidTransform::identity() };

    for k in 0..count {
        let mut placed = false;
        for attempt in 0..cfg.max_attempts {
            let kind = cfg.primitives[rng.random_range(0..cfg.primitives.len())];
            let prim = sample_primitive(kind, &mut rng);
            let model_seed = sub_seed(seed, (k * cfg.max_attempts + attempt) as u64);
            let model = ObjectModel::from_mesh(prim.mesh(), cfg.model_points, model_seed, prim.symmetry(), kind.class_id(), None)?;
            let yaw = Rotation::about_z(rng.random_range(0.0..TAU));

            let bases: Vec<usize> = (0..primitives.len())
                .filter(|&j| top_half_extent(&primitives[j]).is_some() && !supports.contains(&Some(j)))
                .collect();
            let stack_on = if !bases.is_empty() && rng.random::<f64>() < cfg.stack_probability {
                Some(bases[rng.random_range(0..bases.len())])
            } else {
                None
            };
            let xy = match stack_on {
                Some(j) => {
                    let reach = 0.2 * top_half_extent(&primitives[j]).expect("filtered");
                    let base = placements[j].translation;
                    Vec3::new(base.x + rng.random_range(-reach..=reach), base.y + rng.random_range(-reach..=reach), 0.0)
                }
                None => {
                    let half = (cfg.plane_extent / 2.0 - footprint_radius(&prim)).max(0.0);
                    Vec3::new(rng.random_range(-half..=half), rng.random_range(-half..=half), 0.0)
                }
            };

            let rest = prim.half_height();
            let z = match stack_on {
                Some(j) => {
                    let oriented: Vec<Vec3> = model.target_cloud.points.iter().map(|p| yaw.rotate(p) + xy).collect();
                    let base_top = frame.objects[j].target.points.iter().map(|p| p.z).fold(0.0, f64::max);
                    drop_height(&oriented, &frame, rest, base_top + rest + 2.0 * DROP_SCAN_STEP)
                }
                None => rest,
            };
            let placement = RigidTransform::new(yaw, xy + Vec3::new(0.0, 0.0, z));
            let candidate = PlaneFrameObject::from_plane_pose(&model, placement, PointCloud::default());
            let support = match stack_on {
                Some(j) if z > rest + DEFAULT_EPSILON => Some(j),
                Some(_) => continue,
                None => None,
            };
            if !clearance_ok(&candidate.target.points, &frame, support) {
                continue;
            }
            let mut trial = frame.clone();
            trial.objects.push(candidate);
            if !all_stable(&trial) {
                continue;
            }
            frame = trial;
            primitives.push(prim);
            models.push(Arc::new(model));
            model_seeds.push(model_seed);
            placements.push(placement);
            supports.push(support);
            placed = true;
            break;
        }
        if !placed {
            return Err(Error::PlacementFailed(k));
        }
    }

    let mut scene = GeneratedScene {
        seed,
        primitives,
        models,
        model_seeds,
        placements,
        supports,
        plane: PlaneModel::new(RigidTransform::identity()),
        cam: cfg.camera.intrinsics,
        plane_extent: cfg.plane_extent,
    };
    for _ in 0..CAMERA_ATTEMPTS {
        scene.plane = PlaneModel::new(sample_camera(cfg, &mut rng));
        if visible_counts(&scene).iter().all(|&c| c >= cfg.min_visible_pixels) {
            return Ok(scene);
        }
    }
    Err(Error::PlacementFailed(scene.models.len()))
}
