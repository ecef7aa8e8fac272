//! Synthetic ground-truthed scenes, noisy observations, segmentation augmentation and
//! initial-pose perturbation.

mod config;
mod episode;
mod perturb;
pub mod primitives;
mod scene;
mod segmentation;

pub use config::{AugmentationConfig, CameraConfig, ScenarioConfig};
pub use episode::{assemble_episode, make_episode, sample_degradation, Episode, EpisodeObject};
pub use perturb::{perturb_plane, perturb_pose, random_unit_vector};
pub use scene::{generate_scene, render_observation, sub_seed, GeneratedScene, SceneObservation};
pub use segmentation::{augment_segmentation, feasible_points, pixel_mask, segmentation_candidates, source_from_pixels, split_counts};
