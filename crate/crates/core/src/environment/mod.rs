//! Discrete-action, scene-synchronous pose refinement environment.

mod action;
mod il;
mod observation;
mod policy;
mod reward;
mod rollout;

pub use action::{
    apply_action, expert_action, expert_residuals, from_normalized, revert_action, to_normalized, Action, ActionSpace, DEFAULT_STEP_SIZES,
};
pub use il::{export_il_dataset, il_records, import_il_dataset, IlHeader, IlRecord, IL_SCHEMA_VERSION};
pub use observation::{build_observation, compute_distances, DistanceCache, Observation, PointRow, POINT_FEATURES};
pub use policy::{coordinate_action, foreground_chamfer, greedy_action, AlignmentIndex, DENSE_TARGET_POINTS, FIT_POINTS, CallbackPolicy, ExpertPolicy, GreedyObjective, GreedyPolicy, Policy, PolicyContext};
pub use reward::{alignment_reward, plausibility_reward, RewardConfig, RewardSet, STAGNATION_TOLERANCE};
pub use rollout::{refine_scene, write_trajectories_csv, EnvConfig, RenderContext, StepRecord, Trajectory};
