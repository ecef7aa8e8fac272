//! Contact-based physical plausibility of a static scene.
//!
//! All queries run in the plane frame: origin on the support plane, `z` along its
//! outward normal, gravity along `-z`. Object targets are placed with their current
//! pose estimates, so plausibility improves together with the estimates.

mod critical;
mod plane;
mod scene;
mod stability;
mod surface;

pub use critical::{critical_points, evaluate_object, plausibility_verdict, CriticalPoints, ObjectPlausibility, PlausibilityVerdict};
pub use plane::{fit_plane_ransac, PlaneModel, DEFAULT_INLIER_THRESHOLD, DEFAULT_RANSAC_ITERATIONS};
pub use scene::{to_plane_frame, PlaneFrameObject, PlaneFrameScene, SceneObject, SceneState};
pub use stability::{convex_hull_2d, point_in_convex_polygon, stability_check};
pub use surface::{surface_distance, DistanceSource, SurfaceDistanceField, SurfaceParams};

/// Contact / intersection threshold in meters.
pub const DEFAULT_EPSILON: f64 = 0.01;
/// Neighbours consulted by the inside and support tests.
pub const DEFAULT_QUORUM_K: usize = 5;
/// Fraction of the neighbours that must agree.
pub const DEFAULT_QUORUM_FRACTION: f64 = 0.6;
