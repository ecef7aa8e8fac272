//! Geometric symmetry classes in the canonical object frame and selection of the
//! symmetric ground-truth pose closest to an estimate.
//!
//! Objects are canonicalized so that the major symmetry axis is `z` and all symmetry
//! axes pass through the origin; symmetries are therefore pure rotations.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::geometry::{RigidTransform, Rotation};
use crate::{Error, Result};

/// Default sampling resolution of continuous symmetries (degrees).
pub const DEFAULT_RESOLUTION_DEG: f64 = 5.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SymmetryKind {
    None,
    /// Continuous about z, plus the top-bottom flip.
    Cylindrical,
    /// Quarter turns about z, plus the top-bottom flip.
    Cuboid,
    /// Half turns about z and x.
    Box,
    /// Half turn about z.
    FrontBack,
    /// Continuous about z only.
    Rotational,
}

impl SymmetryKind {
    pub const ALL: [SymmetryKind; 6] =
        [Self::None, Self::Cylindrical, Self::Cuboid, Self::Box, Self::FrontBack, Self::Rotational];

    pub fn is_continuous(self) -> bool {
        matches!(self, Self::Cylindrical | Self::Rotational)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::None => "none",
            Self::Cylindrical => "cylindrical",
            Self::Cuboid => "cuboid",
            Self::Box => "box",
            Self::FrontBack => "front_back",
            Self::Rotational => "rotational",
        }
    }
}

impl fmt::Display for SymmetryKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SymmetryKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown symmetry class '{s}'")))
    }
}

/// A symmetry class plus the angular resolution used for continuous classes.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SymmetryRepr", into = "SymmetryRepr")]
pub struct SymmetryClass {
    kind: SymmetryKind,
    resolution_deg: f64,
}

#[derive(Serialize, Deserialize)]
struct SymmetryRepr {
    symmetry: SymmetryKind,
    #[serde(default = "default_resolution", skip_serializing_if = "Option::is_none")]
    resolution_deg: Option<f64>,
}

fn default_resolution() -> Option<f64> {
    None
}

impl From<SymmetryClass> for SymmetryRepr {
    fn from(c: SymmetryClass) -> Self {
        Self { symmetry: c.kind, resolution_deg: c.kind.is_continuous().then_some(c.resolution_deg) }
    }
}

impl TryFrom<SymmetryRepr> for SymmetryClass {
    type Error = Error;

    fn try_from(r: SymmetryRepr) -> Result<Self> {
        SymmetryClass::new(r.symmetry, r.resolution_deg.unwrap_or(DEFAULT_RESOLUTION_DEG))
    }
}

impl SymmetryClass {
    pub fn new(kind: SymmetryKind, resolution_deg: f64) -> Result<Self> {
        if kind.is_continuous() {
            let steps = 360.0 / resolution_deg;
            if !(resolution_deg > 0.0) || (steps - steps.round()).abs() > 1e-9 {
                return Err(Error::InvalidArgument(format!(
                    "symmetry resolution {resolution_deg} deg must be positive and divide 360"
                )));
            }
        }
        Ok(Self { kind, resolution_deg })
    }

    pub fn of(kind: SymmetryKind) -> Self {
        Self { kind, resolution_deg: DEFAULT_RESOLUTION_DEG }
    }

    pub fn none() -> Self {
        Self::of(SymmetryKind::None)
    }

    pub fn kind(&self) -> SymmetryKind {
        self.kind
    }

    pub fn resolution_deg(&self) -> f64 {
        self.resolution_deg
    }

    /// Whether the object has any symmetry (used to pick ADI over ADD).
    pub fn is_symmetric(&self) -> bool {
        self.kind != SymmetryKind::None
    }
}

impl Default for SymmetryClass {
    fn default() -> Self {
        Self::none()
    }
}

/// The discrete set of symmetry rotations `S_s`, identity first.
#[derive(Clone, Debug, PartialEq)]
pub struct SymmetrySet {
    pub rotations: Vec<Rotation>,
}

impl SymmetrySet {
    /// The trivial group of an asymmetric object.
    pub fn identity() -> Self {
        Self { rotations: vec![Rotation::identity()] }
    }

    pub fn len(&self) -> usize {
        self.rotations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rotations.is_empty()
    }
}

fn z_turns(count: usize) -> Vec<Rotation> {
    (0..count).map(|k| Rotation::about_z(2.0 * PI * k as f64 / count as f64)).collect()
}

fn with_flip(base: Vec<Rotation>, flip: Rotation) -> Vec<Rotation> {
    let flipped: Vec<Rotation> = base.iter().map(|&r| r * flip).collect();
    base.into_iter().chain(flipped).collect()
}

pub fn enumerate_symmetries(class: &SymmetryClass) -> SymmetrySet {
    let continuous_steps = || (360.0 / class.resolution_deg).round() as usize;
    let flip = Rotation::about_x(PI);
    let rotations = match class.kind {
        SymmetryKind::None => vec![Rotation::identity()],
        SymmetryKind::Rotational => z_turns(continuous_steps()),
        SymmetryKind::Cylindrical => with_flip(z_turns(continuous_steps()), flip),
        SymmetryKind::Cuboid => with_flip(z_turns(4), flip),
        SymmetryKind::Box => with_flip(z_turns(2), flip),
        SymmetryKind::FrontBack => z_turns(2),
    };
    SymmetrySet { rotations }
}

/// Picks the symmetric ground truth `[R S_s, t]` whose rotation is closest to the
/// estimate, i.e. maximizes `trace(R S_s R_est^T)`; ties go to the lowest index.
pub fn closest_symmetric_pose(gt: &RigidTransform, estimate: &RigidTransform, syms: &SymmetrySet) -> (usize, RigidTransform) {
    let est_t = estimate.rotation.transpose();
    let mut best = (0usize, f64::NEG_INFINITY);
    for (i, s) in syms.rotations.iter().enumerate() {
        let tr = (gt.rotation.matrix() * s.matrix() * est_t.matrix()).trace();
        if tr > best.1 {
            best = (i, tr);
        }
    }
    let idx = best.0;
    let rotation = syms.rotations.get(idx).map_or(gt.rotation, |s| gt.rotation * *s);
    (idx, RigidTransform::new(rotation, gt.translation))
}

/// Smallest residual angle between the estimate and any symmetric ground truth.
pub fn symmetric_residual_angle(gt: &RigidTransform, estimate: &RigidTransform, syms: &SymmetrySet) -> f64 {
    let (_, closest) = closest_symmetric_pose(gt, estimate, syms);
    crate::geometry::rotation_angle(&(closest.rotation * estimate.rotation.transpose()))
}
