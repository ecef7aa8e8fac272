//! On-disk scene bundles.
//!
//! A bundle is a directory holding `scene.json`, `camera.json`, `depth.pfm`,
//! `normals.pfm`, a 16-bit `labels.png` and one OBJ mesh per object under `meshes/`.
//! `scene.json` carries a format tag and schema version, the support plane (explicit or
//! fitted from background pixels), and per object its mesh, symmetry, model sampling
//! seed, optional ground truth, initial estimate and segmentation parameters.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::datagen::primitives::Primitive;
use crate::datagen::{assemble_episode, Episode, EpisodeObject, GeneratedScene, SceneObservation};
use crate::geometry::io::{load_obj, write_obj};
use crate::geometry::{ObjectModel, PointCloud, RigidTransform, TriangleMesh, Vec3};
use crate::plausibility::{fit_plane_ransac, PlaneModel, DEFAULT_INLIER_THRESHOLD, DEFAULT_RANSAC_ITERATIONS};
use crate::scoring::io::{read_pfm_depth, read_pfm_normals, read_png16, write_pfm_depth, write_pfm_normals, write_png16};
use crate::scoring::{backproject_depth, CameraIntrinsics, DepthImage, LabelImage, NormalImage, ScoreConfig};
use crate::symmetry::SymmetryClass;
use crate::{Error, Result};

pub const BUNDLE_FORMAT: &str = "scenefit-scene";
pub const BUNDLE_SCHEMA_VERSION: u32 = 1;

pub const SCENE_FILE: &str = "scene.json";
pub const CAMERA_FILE: &str = "camera.json";
pub const DEPTH_FILE: &str = "depth.pfm";
pub const NORMALS_FILE: &str = "normals.pfm";
pub const LABELS_FILE: &str = "labels.png";
pub const MESH_DIR: &str = "meshes";

/// RANSAC parameters for fitting the plane to background pixels.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlaneFit {
    #[serde(default = "default_iterations")]
    pub iterations: usize,
    #[serde(default = "default_threshold")]
    pub inlier_threshold: f64,
    #[serde(default)]
    pub seed: u64,
}

fn default_iterations() -> usize {
    DEFAULT_RANSAC_ITERATIONS
}

fn default_threshold() -> f64 {
    DEFAULT_INLIER_THRESHOLD
}

impl Default for PlaneFit {
    fn default() -> Self {
        Self { iterations: DEFAULT_RANSAC_ITERATIONS, inlier_threshold: DEFAULT_INLIER_THRESHOLD, seed: 0 }
    }
}

/// Support plane of a bundle.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum PlaneSpec {
    CameraToPlane(RigidTransform),
    FitFromBackground(PlaneFit),
}

/// One object of a bundle.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BundleObject {
    /// Instance label in `labels.png`.
    pub id: u32,
    /// Mesh path relative to the bundle directory.
    pub mesh: String,
    pub class_id: u32,
    #[serde(flatten)]
    pub symmetry: SymmetryClass,
    /// Center of mass in the canonical frame; the mesh volume centroid when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub com: Option<[f64; 3]>,
    /// Target points sampled from the mesh.
    pub model_points: usize,
    pub model_seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub primitive: Option<Primitive>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gt_pose: Option<RigidTransform>,
    pub init_pose: RigidTransform,
    pub foreground_fraction: f64,
    /// Source points requested.
    pub points: usize,
    pub segmentation_seed: u64,
}

/// Contents of `scene.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneManifest {
    pub format: String,
    pub schema_version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub plane: PlaneSpec,
    /// Gravity in the plane frame.
    #[serde(default = "default_gravity")]
    pub gravity: [f64; 3],
    /// Foreground and background pixels presampled before neighbour selection.
    #[serde(default = "default_presample")]
    pub presample: usize,
    pub objects: Vec<BundleObject>,
}

fn default_gravity() -> [f64; 3] {
    [0.0, 0.0, -1.0]
}

fn default_presample() -> usize {
    4096
}

/// A scene bundle held in memory.
#[derive(Clone, Debug)]
pub struct SceneBundle {
    pub manifest: SceneManifest,
    pub camera: CameraIntrinsics,
    pub depth: DepthImage,
    pub normals: NormalImage,
    pub labels: LabelImage,
    /// One mesh per manifest object.
    pub meshes: Vec<TriangleMesh>,
}

fn mesh_name(index: usize) -> String {
    format!("{MESH_DIR}/obj_{index:02}.obj")
}

fn format_error(path: &Path, msg: impl Into<String>) -> Error {
    Error::Parse { path: path.to_path_buf(), msg: msg.into() }
}

fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| format_error(path, e.to_string()))
}

impl SceneBundle {
    /// Bundles a generated scene with its degraded episode parameters.
    pub fn from_generated(
        generated: &GeneratedScene,
        observation: &SceneObservation,
        objects: &[EpisodeObject],
        plane: PlaneSpec,
        presample: usize,
    ) -> Result<Self> {
        if objects.len() != generated.models.len() {
            return Err(Error::InvalidArgument(format!(
                "{} episode objects for {} models",
                objects.len(),
                generated.models.len()
            )));
        }
        let gt = generated.gt_poses();
        let manifest_objects = objects
            .iter()
            .enumerate()
            .map(|(i, o)| {
                let model = &generated.models[i];
                BundleObject {
                    id: o.id,
                    mesh: mesh_name(i),
                    class_id: model.class_id,
                    symmetry: model.symmetry,
                    com: None,
                    model_points: model.target_cloud.len(),
                    model_seed: generated.model_seeds[i],
                    primitive: Some(generated.primitives[i]),
                    gt_pose: Some(gt[i]),
                    init_pose: o.init_pose,
                    foreground_fraction: o.foreground_fraction,
                    points: o.points,
                    segmentation_seed: o.segmentation_seed,
                }
            })
            .collect();
        Ok(Self {
            manifest: SceneManifest {
                format: BUNDLE_FORMAT.into(),
                schema_version: BUNDLE_SCHEMA_VERSION,
                seed: Some(generated.seed),
                plane,
                gravity: default_gravity(),
                presample,
                objects: manifest_objects,
            },
            camera: generated.cam,
            depth: observation.depth.clone(),
            normals: observation.normals.clone(),
            labels: observation.labels.clone(),
            meshes: generated.models.iter().map(|m| m.mesh.clone()).collect(),
        })
    }

    /// Writes the bundle into `dir`, creating it if needed.
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        self.validate(dir)?;
        fs::create_dir_all(dir.join(MESH_DIR))?;
        let mut written = Vec::new();
        for (o, mesh) in self.manifest.objects.iter().zip(&self.meshes) {
            let path = dir.join(&o.mesh);
            if let Some(parent) = path.parent() {
                fs::create_dir_all(parent)?;
            }
            write_obj(mesh, &path)?;
            written.push(path);
        }
        let files = [CAMERA_FILE, DEPTH_FILE, NORMALS_FILE, LABELS_FILE, SCENE_FILE].map(|f| dir.join(f));
        write_json(&self.camera, &files[0])?;
        write_pfm_depth(&self.depth, &files[1])?;
        write_pfm_normals(&self.normals, &files[2])?;
        write_png16(&self.labels, &files[3])?;
        write_json(&self.manifest, &files[4])?;
        written.extend(files);
        Ok(written)
    }

    /// Reads and validates a bundle directory.
    pub fn load(dir: &Path) -> Result<Self> {
        let scene_path = dir.join(SCENE_FILE);
        let manifest: SceneManifest = read_json(&scene_path)?;
        if manifest.format != BUNDLE_FORMAT {
            return Err(format_error(&scene_path, format!("format is {:?}, expected {BUNDLE_FORMAT:?}", manifest.format)));
        }
        if manifest.schema_version != BUNDLE_SCHEMA_VERSION {
            return Err(format_error(
                &scene_path,
                format!("schema_version {} is not supported (expected {BUNDLE_SCHEMA_VERSION})", manifest.schema_version),
            ));
        }
        let camera: CameraIntrinsics = read_json(&dir.join(CAMERA_FILE))?;
        camera.validate()?;
        let depth = read_pfm_depth(&dir.join(DEPTH_FILE))?;
        let normals = read_pfm_normals(&dir.join(NORMALS_FILE))?;
        let labels = read_png16(&dir.join(LABELS_FILE))?;
        let meshes = manifest.objects.iter().map(|o| load_obj(&dir.join(&o.mesh))).collect::<Result<Vec<_>>>()?;
        let bundle = Self { manifest, camera, depth, normals, labels, meshes };
        bundle.validate(dir)?;
        Ok(bundle)
    }

    fn validate(&self, dir: &Path) -> Result<()> {
        let scene_path = dir.join(SCENE_FILE);
        let (w, h) = (self.camera.width, self.camera.height);
        for (name, shape) in [
            (DEPTH_FILE, (self.depth.width(), self.depth.height())),
            (NORMALS_FILE, (self.normals.width(), self.normals.height())),
            (LABELS_FILE, (self.labels.width(), self.labels.height())),
        ] {
            if shape != (w, h) {
                return Err(Error::ShapeMismatch(format!("{name} is {}x{}, camera is {w}x{h}", shape.0, shape.1)));
            }
        }
        if self.meshes.len() != self.manifest.objects.len() {
            return Err(format_error(&scene_path, "mesh count differs from object count"));
        }
        let mut ids: Vec<u32> = self.manifest.objects.iter().map(|o| o.id).collect();
        ids.sort_unstable();
        if ids.windows(2).any(|w| w[0] == w[1]) {
            return Err(format_error(&scene_path, "object ids must be unique"));
        }
        for o in &self.manifest.objects {
            if o.id == 0 || o.id > u32::from(u16::MAX) {
                return Err(format_error(&scene_path, format!("object id {} must lie in [1, 65535]", o.id)));
            }
            if !(0.0..=1.0).contains(&o.foreground_fraction) {
                return Err(format_error(&scene_path, format!("object {}: foreground_fraction must lie in [0, 1]", o.id)));
            }
            if o.points == 0 || o.model_points == 0 {
                return Err(format_error(&scene_path, format!("object {}: points and model_points must be positive", o.id)));
            }
            let rel = Path::new(&o.mesh);
            if rel.is_absolute() || rel.components().any(|c| matches!(c, std::path::Component::ParentDir)) {
                return Err(format_error(&scene_path, format!("object {}: mesh path must stay inside the bundle", o.id)));
            }
        }
        let g = Vec3::from(self.manifest.gravity);
        if !(g.norm() > 0.0 && g.iter().all(|v| v.is_finite())) {
            return Err(format_error(&scene_path, "gravity must be a finite non-zero vector"));
        }
        if self.manifest.presample == 0 {
            return Err(format_error(&scene_path, "presample must be positive"));
        }
        Ok(())
    }

    /// Object models rebuilt from the meshes and sampling seeds.
    pub fn models(&self) -> Result<Vec<Arc<ObjectModel>>> {
        self.manifest
            .objects
            .iter()
            .zip(&self.meshes)
            .map(|(o, mesh)| {
                ObjectModel::from_mesh(mesh.clone(), o.model_points, o.model_seed, o.symmetry, o.class_id, o.com.map(Vec3::from))
                    .map(Arc::new)
            })
            .collect()
    }

    /// The support plane, fitting it to background pixels when requested.
    pub fn plane(&self) -> Result<PlaneModel> {
        match self.manifest.plane {
            PlaneSpec::CameraToPlane(t) => Ok(PlaneModel::new(t)),
            PlaneSpec::FitFromBackground(fit) => {
                let points = backproject_depth(&self.depth, &self.camera)
                    .into_iter()
                    .filter(|(k, _)| self.labels.data()[*k] == 0)
                    .map(|(_, p)| p)
                    .collect();
                let cloud = PointCloud { points, normals: None, labels: None };
                fit_plane_ransac(&cloud, fit.iterations, fit.inlier_threshold, fit.seed)
            }
        }
    }

    /// Ground-truth poses, if every object has one.
    pub fn ground_truth(&self) -> Option<Vec<RigidTransform>> {
        self.manifest.objects.iter().map(|o| o.gt_pose).collect()
    }

    /// Builds the refinement episode. `Episode::gt` is empty when ground truth is incomplete.
    pub fn episode(&self, score: ScoreConfig) -> Result<Episode> {
        let models = self.models()?;
        let plane = self.plane()?;
        let objects = self
            .manifest
            .objects
            .iter()
            .map(|o| EpisodeObject {
                id: o.id,
                foreground_fraction: o.foreground_fraction,
                points: o.points,
                segmentation_seed: o.segmentation_seed,
                init_pose: o.init_pose,
            })
            .collect();
        let observation = SceneObservation {
            depth: self.depth.clone(),
            clean_depth: self.depth.clone(),
            normals: self.normals.clone(),
            labels: self.labels.clone(),
        };
        let gt = self.ground_truth().unwrap_or_default();
        let mut episode = assemble_episode(&models, gt, &observation, &self.camera, objects, plane, self.manifest.presample, score)?;
        episode.scene.gravity = Vec3::from(self.manifest.gravity).normalize();
        Ok(episode)
    }
}

/// Bundle directories directly under `root` (those containing a `scene.json`), sorted by name.
pub fn list_bundles(root: &Path) -> Result<Vec<PathBuf>> {
    if root.join(SCENE_FILE).is_file() {
        return Ok(vec![root.to_path_buf()]);
    }
    let mut dirs = Vec::new();
    for entry in fs::read_dir(root)? {
        let path = entry?.path();
        if path.join(SCENE_FILE).is_file() {
            dirs.push(path);
        }
    }
    dirs.sort();
    Ok(dirs)
}
