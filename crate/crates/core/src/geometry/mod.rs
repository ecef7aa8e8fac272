//! Rigid-body math, point clouds, meshes and nearest-neighbour machinery.

mod cloud;
pub mod io;
mod kdtree;
mod mesh;
mod model;
mod normals;
mod transform;

pub use cloud::{chamfer_distance, knn, ChamferIndex, PointCloud};
pub use kdtree::KdTree;
pub use mesh::{sample_mesh_surface, TriangleMesh};
pub use model::{denormalize_points, normalize_pair, ObjectModel};
pub use normals::{estimate_normals, estimate_normals_with_confidence, DEFAULT_NORMAL_NEIGHBORS};
pub use transform::{compose, rotation_angle, RigidTransform, Rotation, ROTATION_TOLERANCE};

/// Three-component real vector; meters unless stated otherwise.
pub type Vec3 = nalgebra::Vector3<f64>;
