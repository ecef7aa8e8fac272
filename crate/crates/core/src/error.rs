use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("point cloud is empty")]
    EmptyCloud,

    #[error("mesh is empty or has no face with positive area")]
    DegenerateMesh,

    #[error("object model is degenerate: {0}")]
    DegenerateModel(String),

    #[error("need at least {needed} points, got {got}")]
    NotEnoughPoints { needed: usize, got: usize },

    #[error("points are degenerate: {0}")]
    DegeneratePoints(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("scene has no objects")]
    EmptyScene,

    #[error("surface distances are stale: estimates changed since they were computed")]
    StaleDistances,

    #[error("scene has no support plane")]
    MissingPlane,

    #[error("every point of object {0} is labeled as outlier")]
    NoForeground(usize),

    #[error("image shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("{requested} samples requested but only {available} candidates available")]
    InsufficientCandidates { requested: usize, available: usize },

    #[error("scene placement failed after {0} attempts")]
    PlacementFailed(usize),

    #[error("policy needs ground truth, none supplied for object {0}")]
    MissingGroundTruth(usize),

    #[error("parse error in {path}: {msg}")]
    Parse { path: PathBuf, msg: String },

    #[error("{0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
