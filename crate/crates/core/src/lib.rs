//! Scene-level object pose refinement.
//!
//! The crate covers the full non-learned machinery of iterative, plausibility-aware
//! pose refinement over a static scene:
//!
//! * [`geometry`]: rigid transforms, point clouds, meshes, exact kNN, Chamfer distance,
//!   surface sampling, normal estimation and the normalized input representation.
//! * [`symmetry`]: canonical-frame symmetry groups and closest-equivalent pose selection.
//! * [`plausibility`]: support-plane fitting, signed surface distances, critical points
//!   and the static stability verdict.
//! * [`environment`]: the discrete-action refinement environment with expert and greedy
//!   policies, rewards, scene-parallel rollouts and imitation-learning export.
//! * [`scoring`]: software depth/normal rendering and rendering-based pose scoring.
//! * [`metrics`]: ADD/ADI, threshold recalls and AUC.
//! * [`datagen`]: synthetic ground-truthed scenes, noisy observations and augmentation.
//! * [`bundle`]: the on-disk scene bundle format.

pub mod bundle;
pub mod datagen;
pub mod environment;
pub mod error;
pub mod geometry;
pub mod metrics;
pub mod plausibility;
pub mod scoring;
pub mod symmetry;

pub use error::{Error, Result};
pub use geometry::{
    chamfer_distance, compose, rotation_angle, ObjectModel, PointCloud, RigidTransform, Rotation,
    TriangleMesh, Vec3,
};
pub use symmetry::{SymmetryClass, SymmetryKind, SymmetrySet};
