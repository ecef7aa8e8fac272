//! Closed, outward-oriented primitive meshes in their canonical frames: centered on
//! the bounding box, resting face at `z = -height / 2`, symmetry axis along `z`.

use serde::{Deserialize, Serialize};

use crate::geometry::{TriangleMesh, Vec3};
use crate::symmetry::{SymmetryClass, SymmetryKind};

/// Facets around a cylinder; a multiple of 72 keeps the mesh invariant under 5 degree turns.
pub const CYLINDER_SEGMENTS: usize = 72;

/// Axis-aligned box with the given edge lengths, centered at the origin.
pub fn box_mesh(size: Vec3) -> TriangleMesh {
    let h = size / 2.0;
    let vertices: Vec<Vec3> = (0..8)
        .map(|i| Vec3::new(if i & 1 == 0 { -h.x } else { h.x }, if i & 2 == 0 { -h.y } else { h.y }, if i & 4 == 0 { -h.z } else { h.z }))
        .collect();
    let faces = vec![
        [0, 2, 1], [1, 2, 3], // -z
        [4, 5, 6], [5, 7, 6], // +z
        [0, 1, 4], [1, 5, 4], // -y
        [2, 6, 3], [3, 6, 7], // +y
        [0, 4, 2], [2, 4, 6], // -x
        [1, 3, 5], [3, 7, 5], // +x
    ];
    TriangleMesh::new(vertices, faces).expect("box faces index valid vertices")
}

/// Closed cylinder of the given radius and height about the `z` axis.
pub fn cylinder_mesh(radius: f64, height: f64, segments: usize) -> TriangleMesh {
    let segments = segments.max(3);
    let hz = height / 2.0;
    let mut vertices = Vec::with_capacity(2 * segments + 2);
    for z in [-hz, hz] {
        for k in 0..segments {
            let a = std::f64::consts::TAU * k as f64 / segments as f64;
            vertices.push(Vec3::new(radius * a.cos(), radius * a.sin(), z));
        }
    }
    let bottom_center = vertices.len() as u32;
    vertices.push(Vec3::new(0.0, 0.0, -hz));
    vertices.push(Vec3::new(0.0, 0.0, hz));
    let top_center = bottom_center + 1;
    let s = segments as u32;
    let mut faces = Vec::with_capacity(4 * segments);
    for k in 0..s {
        let next = (k + 1) % s;
        faces.push([k, next, s + next]);
        faces.push([k, s + next, s + k]);
        faces.push([bottom_center, next, k]);
        faces.push([top_center, s + k, s + next]);
    }
    TriangleMesh::new(vertices, faces).expect("cylinder faces index valid vertices")
}

/// L-shaped bracket: a base plate of `length` along `x` and a wall of `height` along
/// `z`, both `thickness` thick, extruded `width` along `y`. Centered on its bounding box.
pub fn l_bracket_mesh(length: f64, width: f64, height: f64, thickness: f64) -> TriangleMesh {
    // Counter-clockwise profile in (x, z), star-shaped about its first vertex.
    let profile = [(0.0, 0.0), (length, 0.0), (length, thickness), (thickness, thickness), (thickness, height), (0.0, height)];
    let n = profile.len() as u32;
    let hy = width / 2.0;
    let mut vertices = Vec::with_capacity(2 * profile.len());
    for y in [hy, -hy] {
        for &(x, z) in &profile {
            vertices.push(Vec3::new(x - length / 2.0, y, z - height / 2.0));
        }
    }
    let mut faces = Vec::new();
    // Front cap (y = +hy) faces +y: counter-clockwise in (x, z) seen from +y is clockwise, so reverse.
    for k in 1..n - 1 {
        faces.push([0, k + 1, k]);
        faces.push([n, n + k, n + k + 1]);
    }
    for k in 0..n {
        let next = (k + 1) % n;
        faces.push([k, next, n + next]);
        faces.push([k, n + next, n + k]);
    }
    let mesh = TriangleMesh::new(vertices.clone(), faces.clone()).expect("bracket faces index valid vertices");
    if mesh.volume() < 0.0 {
        let flipped = faces.into_iter().map(|[a, b, c]| [a, c, b]).collect();
        TriangleMesh::new(vertices, flipped).expect("bracket faces index valid vertices")
    } else {
        mesh
    }
}

/// Primitive families used by the scene generator.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PrimitiveKind {
    Box,
    Cylinder,
    LShape,
}

impl PrimitiveKind {
    pub fn class_id(self) -> u32 {
        match self {
            PrimitiveKind::Box => 1,
            PrimitiveKind::Cylinder => 2,
            PrimitiveKind::LShape => 3,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            PrimitiveKind::Box => "box",
            PrimitiveKind::Cylinder => "cylinder",
            PrimitiveKind::LShape => "l_shape",
        }
    }
}

/// A sized primitive.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Primitive {
    Box { size: [f64; 3] },
    Cylinder { radius: f64, height: f64 },
    LShape { length: f64, width: f64, height: f64, thickness: f64 },
}

impl Primitive {
    pub fn kind(&self) -> PrimitiveKind {
        match self {
            Primitive::Box { .. } => PrimitiveKind::Box,
            Primitive::Cylinder { .. } => PrimitiveKind::Cylinder,
            Primitive::LShape { .. } => PrimitiveKind::LShape,
        }
    }

    pub fn mesh(&self) -> TriangleMesh {
        match *self {
            Primitive::Box { size } => box_mesh(Vec3::from(size)),
            Primitive::Cylinder { radius, height } => cylinder_mesh(radius, height, CYLINDER_SEGMENTS),
            Primitive::LShape { length, width, height, thickness } => l_bracket_mesh(length, width, height, thickness),
        }
    }

    /// Height of the canonical frame origin above the resting face.
    pub fn half_height(&self) -> f64 {
        match *self {
            Primitive::Box { size } => size[2] / 2.0,
            Primitive::Cylinder { height, .. } | Primitive::LShape { height, .. } => height / 2.0,
        }
    }

    /// Geometric symmetry class. Boxes with a square footprint gain the quarter turns.
    pub fn symmetry(&self) -> SymmetryClass {
        match *self {
            Primitive::Box { size } if (size[0] - size[1]).abs() < 1e-12 => SymmetryClass::of(SymmetryKind::Cuboid),
            Primitive::Box { .. } => SymmetryClass::of(SymmetryKind::Box),
            Primitive::Cylinder { .. } => SymmetryClass::of(SymmetryKind::Cylindrical),
            Primitive::LShape { .. } => SymmetryClass::none(),
        }
    }
}
