use nalgebra::{Matrix3, Matrix4, Unit, UnitQuaternion};
use serde::{Deserialize, Serialize};

use super::Vec3;
use crate::{Error, Result};

/// Orthonormality / determinant tolerance for a valid rotation.
pub const ROTATION_TOLERANCE: f64 = 1e-9;

/// A proper rotation in SO(3), stored as a 3x3 matrix.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[[f64; 3]; 3]", into = "[[f64; 3]; 3]")]
pub struct Rotation(Matrix3<f64>);

impl Rotation {
    pub fn identity() -> Self {
        Self(Matrix3::identity())
    }

    /// Validating constructor.
    pub fn from_matrix(m: Matrix3<f64>) -> Result<Self> {
        let r = Self(m);
        if !r.is_valid() {
            return Err(Error::InvalidArgument(format!(
                "matrix is not a rotation (orthonormality error {:.3e}, det {:.12})",
                (m.transpose() * m - Matrix3::identity()).abs().max(),
                m.determinant()
            )));
        }
        Ok(r)
    }

    /// Projects an arbitrary (near-)rotation matrix onto SO(3) via its polar decomposition.
    pub fn from_matrix_projected(m: Matrix3<f64>) -> Self {
        Self(m).orthonormalized()
    }

    pub fn about_x(angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Self(Matrix3::new(1.0, 0.0, 0.0, 0.0, c, -s, 0.0, s, c))
    }

    pub fn about_y(angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Self(Matrix3::new(c, 0.0, s, 0.0, 1.0, 0.0, -s, 0.0, c))
    }

    pub fn about_z(angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Self(Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0))
    }

    /// Rotation by `angle` radians about `axis` (need not be normalized; a zero axis gives identity).
    pub fn from_axis_angle(axis: &Vec3, angle: f64) -> Self {
        match Unit::try_new(*axis, 1e-15) {
            Some(axis) => Self(*UnitQuaternion::from_axis_angle(&axis, angle).to_rotation_matrix().matrix()),
            None => Self::identity(),
        }
    }

    /// Rotation from a rotation vector (axis scaled by angle).
    pub fn from_rotation_vector(v: &Vec3) -> Self {
        Self::from_axis_angle(v, v.norm())
    }

    /// Intrinsic x-y-z Euler angles: `R = Rx(a) * Ry(b) * Rz(c)`.
    pub fn from_euler_xyz(a: f64, b: f64, c: f64) -> Self {
        Self(Self::about_x(a).0 * Self::about_y(b).0 * Self::about_z(c).0)
    }

    /// Inverse of [`Rotation::from_euler_xyz`]. In gimbal lock the z angle is set to zero.
    pub fn euler_xyz(&self) -> [f64; 3] {
        let m = &self.0;
        let sb = m[(0, 2)].clamp(-1.0, 1.0);
        let b = sb.asin();
        if sb.abs() < 1.0 - 1e-12 {
            let a = (-m[(1, 2)]).atan2(m[(2, 2)]);
            let c = (-m[(0, 1)]).atan2(m[(0, 0)]);
            [a, b, c]
        } else {
            [m[(2, 1)].atan2(m[(1, 1)]), b, 0.0]
        }
    }

    /// Rotation vector (axis * angle), angle in [0, pi].
    pub fn rotation_vector(&self) -> Vec3 {
        let q = UnitQuaternion::from_matrix(&self.0);
        q.scaled_axis()
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.0
    }

    pub fn transpose(&self) -> Self {
        Self(self.0.transpose())
    }

    pub fn inverse(&self) -> Self {
        self.transpose()
    }

    pub fn trace(&self) -> f64 {
        self.0.trace()
    }

    pub fn rotate(&self, v: &Vec3) -> Vec3 {
        self.0 * v
    }

    /// Column `i` of the matrix, i.e. the image of the i-th basis vector.
    pub fn axis(&self, i: usize) -> Vec3 {
        self.0.column(i).into_owned()
    }

    pub fn orthonormality_error(&self) -> f64 {
        (self.0.transpose() * self.0 - Matrix3::identity()).abs().max()
    }

    pub fn is_valid(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
            && self.orthonormality_error() <= ROTATION_TOLERANCE
            && (self.0.determinant() - 1.0).abs() <= ROTATION_TOLERANCE
    }

    pub fn orthonormalized(&self) -> Self {
        let svd = self.0.svd(true, true);
        let (u, v_t) = (svd.u.unwrap(), svd.v_t.unwrap());
        let mut r = u * v_t;
        if r.determinant() < 0.0 {
            let mut u = u;
            u.column_mut(2).neg_mut();
            r = u * v_t;
        }
        Self(r)
    }

    fn renormalized_if_drifted(m: Matrix3<f64>) -> Self {
        let r = Self(m);
        if r.orthonormality_error() > ROTATION_TOLERANCE {
            r.orthonormalized()
        } else {
            r
        }
    }
}

impl Default for Rotation {
    fn default() -> Self {
        Self::identity()
    }
}

impl std::ops::Mul for Rotation {
    type Output = Rotation;

    fn mul(self, rhs: Rotation) -> Rotation {
        Rotation::renormalized_if_drifted(self.0 * rhs.0)
    }
}

impl std::ops::Mul<Vec3> for Rotation {
    type Output = Vec3;

    fn mul(self, rhs: Vec3) -> Vec3 {
        self.0 * rhs
    }
}

impl From<Rotation> for [[f64; 3]; 3] {
    fn from(r: Rotation) -> Self {
        let m = r.0;
        [
            [m[(0, 0)], m[(0, 1)], m[(0, 2)]],
            [m[(1, 0)], m[(1, 1)], m[(1, 2)]],
            [m[(2, 0)], m[(2, 1)], m[(2, 2)]],
        ]
    }
}

impl TryFrom<[[f64; 3]; 3]> for Rotation {
    type Error = Error;

    fn try_from(rows: [[f64; 3]; 3]) -> Result<Self> {
        let m = Matrix3::from_fn(|i, j| rows[i][j]);
        // Values written with limited precision by other tools are accepted and re-projected.
        let r = Rotation(m);
        if r.is_valid() {
            Ok(r)
        } else if r.orthonormality_error() < 1e-4 && m.determinant() > 0.0 {
            Ok(r.orthonormalized())
        } else {
            Rotation::from_matrix(m)
        }
    }
}

/// Rotation angle in radians, in `[0, pi]`.
pub fn rotation_angle(r: &Rotation) -> f64 {
    ((r.trace() - 1.0) / 2.0).clamp(-1.0, 1.0).acos()
}

/// A rigid transform `x -> R x + t`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize, Default)]
pub struct RigidTransform {
    pub rotation: Rotation,
    pub translation: Vec3,
}

impl RigidTransform {
    pub fn new(rotation: Rotation, translation: Vec3) -> Self {
        Self { rotation, translation }
    }

    pub fn identity() -> Self {
        Self::default()
    }

    pub fn from_translation(t: Vec3) -> Self {
        Self::new(Rotation::identity(), t)
    }

    pub fn from_rotation(r: Rotation) -> Self {
        Self::new(r, Vec3::zeros())
    }

    pub fn apply(&self, p: &Vec3) -> Vec3 {
        self.rotation.matrix() * p + self.translation
    }

    pub fn apply_vector(&self, v: &Vec3) -> Vec3 {
        self.rotation.matrix() * v
    }

    pub fn inverse(&self) -> Self {
        let rt = self.rotation.transpose();
        Self::new(rt, -(rt.matrix() * self.translation))
    }

    /// `self * other`: applies `other` first, then `self`.
    pub fn then_after(&self, other: &RigidTransform) -> Self {
        compose(self, other)
    }

    pub fn to_homogeneous(&self) -> Matrix4<f64> {
        let mut m = Matrix4::identity();
        m.fixed_view_mut::<3, 3>(0, 0).copy_from(self.rotation.matrix());
        m.fixed_view_mut::<3, 1>(0, 3).copy_from(&self.translation);
        m
    }

    pub fn is_valid(&self) -> bool {
        self.rotation.is_valid() && self.translation.iter().all(|v| v.is_finite())
    }
}

impl std::ops::Mul for RigidTransform {
    type Output = RigidTransform;

    fn mul(self, rhs: RigidTransform) -> RigidTransform {
        compose(&self, &rhs)
    }
}

/// Composition `a * b`: the result applies `b` first, then `a`.
pub fn compose(a: &RigidTransform, b: &RigidTransform) -> RigidTransform {
    RigidTransform {
        rotation: a.rotation * b.rotation,
        translation: a.rotation.matrix() * b.translation + a.translation,
    }
}
