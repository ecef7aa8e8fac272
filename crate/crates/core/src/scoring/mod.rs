//! Software depth/normal rendering and rendering-based pose scoring.

mod image;
pub mod io;
mod render;
mod score;

pub use image::{backproject_depth, CameraIntrinsics, DepthImage, Image, LabelImage, Mask, NormalImage};
pub use render::{render, Rasterizer};
pub use score::{best_index, pixel_score, score_pose, select_best_pose, ScoreConfig};
