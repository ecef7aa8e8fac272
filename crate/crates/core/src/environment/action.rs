use serde::{Deserialize, Serialize};

use crate::geometry::{ObjectModel, RigidTransform, Rotation, Vec3};
use crate::symmetry::{closest_symmetric_pose, SymmetrySet};
use crate::{Error, Result};

pub const DEFAULT_STEP_SIZES: [f64; 5] = [0.0033, 0.01, 0.03, 0.09, 0.27];

/// Per-axis step magnitudes shared by the three rotation axes (radians) and the three
/// translation axes (normalized units). Index 0 is "stop"; index `±k` is the `k`-th
/// positive size with that sign.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct ActionSpace {
    steps: Vec<f64>,
}

impl ActionSpace {
    /// Builds a space from positive sizes; a leading zero is accepted and ignored.
    pub fn new(sizes: &[f64]) -> Result<Self> {
        let positive: Vec<f64> = if sizes.first() == Some(&0.0) { sizes[1..].to_vec() } else { sizes.to_vec() };
        if positive.is_empty() {
            return Err(Error::InvalidArgument("action space needs at least one positive step".into()));
        }
        if positive.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
            return Err(Error::InvalidArgument(format!("step sizes must be positive and finite: {sizes:?}")));
        }
        if positive.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidArgument(format!("step sizes must be strictly increasing: {sizes:?}")));
        }
        let mut steps = vec![0.0];
        steps.extend(positive);
        Ok(Self { steps })
    }

    /// Non-negative sizes, starting with the stop size 0.
    pub fn sizes(&self) -> &[f64] {
        &self.steps
    }

    /// Largest valid index magnitude.
    pub fn max_index(&self) -> i32 {
        (self.steps.len() - 1) as i32
    }

    /// Choices per axis: `2 * max_index + 1`.
    pub fn choices(&self) -> usize {
        2 * self.steps.len() - 1
    }

    pub fn value(&self, index: i32) -> f64 {
        let v = self.steps[index.unsigned_abs() as usize];
        if index < 0 {
            -v
        } else {
            v
        }
    }

    pub fn contains(&self, index: i32) -> bool {
        index.abs() <= self.max_index()
    }

    /// Largest step not exceeding `|residual|`, signed like the residual; 0 below the
    /// smallest positive step.
    pub fn floor_index(&self, residual: f64) -> i32 {
        let mag = residual.abs();
        let k = self.steps.iter().rposition(|&s| s <= mag).unwrap_or(0) as i32;
        if residual < 0.0 {
            -k
        } else {
            k
        }
    }

    /// Maps a signed index to `0..choices()`.
    pub fn to_class(&self, index: i32) -> usize {
        (index + self.max_index()) as usize
    }

    pub fn from_class(&self, class: usize) -> i32 {
        class as i32 - self.max_index()
    }
}

impl Default for ActionSpace {
    fn default() -> Self {
        Self::new(&DEFAULT_STEP_SIZES).expect("default steps are valid")
    }
}

impl TryFrom<Vec<f64>> for ActionSpace {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(&v)
    }
}

impl From<ActionSpace> for Vec<f64> {
    fn from(s: ActionSpace) -> Self {
        s.steps[1..].to_vec()
    }
}

/// Signed step indices per rotation axis (x, y, z) and translation axis.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Action {
    pub rot: [i32; 3],
    pub trans: [i32; 3],
}

impl Action {
    pub const STOP: Action = Action { rot: [0; 3], trans: [0; 3] };

    pub fn is_stop(&self) -> bool {
        *self == Self::STOP
    }

    pub fn negated(&self) -> Action {
        Action { rot: self.rot.map(|i| -i), trans: self.trans.map(|i| -i) }
    }

    /// All six indices, rotation first.
    pub fn indices(&self) -> [i32; 6] {
        [self.rot[0], self.rot[1], self.rot[2], self.trans[0], self.trans[1], self.trans[2]]
    }

    pub fn from_indices(i: [i32; 6]) -> Action {
        Action { rot: [i[0], i[1], i[2]], trans: [i[3], i[4], i[5]] }
    }

    pub fn validate(&self, space: &ActionSpace) -> Result<()> {
        match self.indices().iter().find(|&&i| !space.contains(i)) {
            Some(i) => Err(Error::InvalidArgument(format!("step index {i} outside the action space"))),
            None => Ok(()),
        }
    }

    /// Rotation step `Rx(a) Ry(b) Rz(c)` and translation step of this action.
    pub fn steps(&self, space: &ActionSpace) -> (Rotation, Vec3) {
        let r = self.rot.map(|i| space.value(i));
        let t = self.trans.map(|i| space.value(i));
        (Rotation::from_euler_xyz(r[0], r[1], r[2]), Vec3::new(t[0], t[1], t[2]))
    }
}

/// Pose expressed in the normalized representation: the rotation is unchanged and the
/// translation is the model centroid's camera position divided by the model scale.
pub fn to_normalized(pose: &RigidTransform, model: &ObjectModel) -> RigidTransform {
    RigidTransform::new(pose.rotation, pose.apply(&model.centroid) / model.scale)
}

pub fn from_normalized(normalized: &RigidTransform, model: &ObjectModel) -> RigidTransform {
    let t = normalized.translation * model.scale - normalized.rotation.rotate(&model.centroid);
    RigidTransform::new(normalized.rotation, t)
}

/// Disentangled update: the rotation step is left-composed (rotating about the model
/// centroid) and the translation step is added in normalized units.
pub fn apply_action(estimate: &RigidTransform, action: &Action, space: &ActionSpace, model: &ObjectModel) -> RigidTransform {
    if action.is_stop() {
        return *estimate;
    }
    let n = to_normalized(estimate, model);
    let (r, t) = action.steps(space);
    from_normalized(&RigidTransform::new(r * n.rotation, n.translation + t), model)
}

/// Inverse of [`apply_action`] for the same action; the stop action leaves the pose untouched.
pub fn revert_action(estimate: &RigidTransform, action: &Action, space: &ActionSpace, model: &ObjectModel) -> RigidTransform {
    if action.is_stop() {
        return *estimate;
    }
    let n = to_normalized(estimate, model);
    let (r, t) = action.steps(space);
    from_normalized(&RigidTransform::new(r.transpose() * n.rotation, n.translation - t), model)
}

/// Per-axis residuals from the estimate to the ground truth: intrinsic x-y-z Euler angles
/// of `R_gt R_est^T` against the symmetry-closest rotation, and the normalized translation
/// difference of the centroid. The translation target uses the ground truth itself so that
/// switching between symmetric copies never moves it.
pub fn expert_residuals(gt: &RigidTransform, estimate: &RigidTransform, syms: &SymmetrySet, model: &ObjectModel) -> ([f64; 3], Vec3) {
    let (_, target) = closest_symmetric_pose(gt, estimate, syms);
    let delta_r = target.rotation * estimate.rotation.transpose();
    let delta_t = to_normalized(gt, model).translation - to_normalized(estimate, model).translation;
    (delta_r.euler_xyz(), delta_t)
}

/// Largest non-overshooting step per axis towards the symmetry-closest ground truth.
pub fn expert_action(gt: &RigidTransform, estimate: &RigidTransform, syms: &SymmetrySet, space: &ActionSpace, model: &ObjectModel) -> Action {
    let (r, t) = expert_residuals(gt, estimate, syms, model);
    Action { rot: r.map(|x| space.floor_index(x)), trans: [0, 1, 2].map(|i| space.floor_index(t[i])) }
}
