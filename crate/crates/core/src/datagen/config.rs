use serde::{Deserialize, Serialize};

use crate::scoring::CameraIntrinsics;
use crate::{Error, Result};

use super::primitives::PrimitiveKind;

fn check_range(name: &str, r: [f64; 2], lo: f64, hi: f64) -> Result<()> {
    if !(r[0].is_finite() && r[1].is_finite() && lo <= r[0] && r[0] <= r[1] && r[1] <= hi) {
        return Err(Error::InvalidArgument(format!("{name}: range {r:?} must be ordered within [{lo}, {hi}]")));
    }
    Ok(())
}

/// Camera placement: the camera looks at a point near the plane origin from a random
/// azimuth, an elevation above the plane and a distance in the given ranges.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CameraConfig {
    pub intrinsics: CameraIntrinsics,
    pub distance: [f64; 2],
    pub elevation_deg: [f64; 2],
    /// Maximum offset of the look-at point from the plane origin (meters).
    pub target_jitter: f64,
}

impl Default for CameraConfig {
    fn default() -> Self {
        Self {
            intrinsics: CameraIntrinsics { fx: 525.0, fy: 525.0, cx: 320.0, cy: 240.0, width: 640, height: 480 },
            distance: [0.7, 1.0],
            elevation_deg: [35.0, 70.0],
            target_jitter: 0.03,
        }
    }
}

/// Synthetic desk-scale scenes of primitives resting on a plane.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    /// Inclusive range of objects per scene.
    pub objects: [usize; 2],
    pub primitives: Vec<PrimitiveKind>,
    /// Side length of the square region objects are placed in (meters).
    pub plane_extent: f64,
    /// Probability of trying to stack an object on an earlier one.
    pub stack_probability: f64,
    pub camera: CameraConfig,
    /// Standard deviation of additive depth noise (meters).
    pub depth_noise: f64,
    /// Target points sampled per model.
    pub model_points: usize,
    /// Minimum visible pixels per object.
    pub min_visible_pixels: usize,
    /// Placement attempts per object before giving up.
    pub max_attempts: usize,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            objects: [1, 5],
            primitives: vec![PrimitiveKind::Box, PrimitiveKind::Cylinder, PrimitiveKind::LShape],
            plane_extent: 0.5,
            stack_probability: 0.3,
            camera: CameraConfig::default(),
            depth_noise: 0.0,
            model_points: 1024,
            min_visible_pixels: 200,
            max_attempts: 100,
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        if self.objects[0] == 0 || self.objects[0] > self.objects[1] {
            return Err(Error::InvalidArgument(format!("objects: range {:?} must satisfy 1 <= min <= max", self.objects)));
        }
        if self.primitives.is_empty() {
            return Err(Error::InvalidArgument("primitives: at least one primitive kind is required".into()));
        }
        if !(self.plane_extent > 0.0) {
            return Err(Error::InvalidArgument("plane_extent: must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.stack_probability) {
            return Err(Error::InvalidArgument("stack_probability: must lie in [0, 1]".into()));
        }
        if !(self.depth_noise >= 0.0) {
            return Err(Error::InvalidArgument("depth_noise: must be non-negative".into()));
        }
        if self.model_points < 16 {
            return Err(Error::InvalidArgument("model_points: at least 16 points are required".into()));
        }
        if self.max_attempts == 0 {
            return Err(Error::InvalidArgument("max_attempts: must be positive".into()));
        }
        self.camera.intrinsics.validate()?;
        check_range("camera.distance", self.camera.distance, 0.05, 100.0)?;
        check_range("camera.elevation_deg", self.camera.elevation_deg, 1.0, 90.0)?;
        Ok(())
    }
}

/// Segmentation and initial-pose degradation applied to generated scenes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AugmentationConfig {
    /// Range of the foreground fraction `p` of sampled source points.
    pub foreground_fraction: [f64; 2],
    pub rotation_max_deg: f64,
    /// Maximum translation error in normalized units.
    pub translation_max: f64,
    pub plane_rotation_max_deg: f64,
    /// Maximum plane translation jitter in meters.
    pub plane_translation_max: f64,
    /// Source points per object.
    pub points: usize,
    /// Foreground and background pixels presampled before neighbour selection.
    pub presample: usize,
}

impl Default for AugmentationConfig {
    fn default() -> Self {
        Self {
            foreground_fraction: [0.5, 1.0],
            rotation_max_deg: 90.0,
            translation_max: 1.0,
            plane_rotation_max_deg: 5.0,
            plane_translation_max: 0.02,
            points: 1024,
            presample: 4096,
        }
    }
}

impl AugmentationConfig {
    pub fn validate(&self) -> Result<()> {
        check_range("foreground_fraction", self.foreground_fraction, 0.0, 1.0)?;
        for (name, v) in [
            ("rotation_max_deg", self.rotation_max_deg),
            ("translation_max", self.translation_max),
            ("plane_rotation_max_deg", self.plane_rotation_max_deg),
            ("plane_translation_max", self.plane_translation_max),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::InvalidArgument(format!("{name}: must be non-negative")));
            }
        }
        if self.points == 0 || self.presample == 0 {
            return Err(Error::InvalidArgument("points and presample must be positive".into()));
        }
        Ok(())
    }
}
