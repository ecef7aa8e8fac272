use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{PointCloud, RigidTransform, Vec3};
use crate::{Error, Result};

const AREA_EPS: f64 = 1e-18;

/// An indexed triangle mesh with per-face unit normals (counter-clockwise winding faces outward).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TriangleMesh {
    pub vertices: Vec<Vec3>,
    pub faces: Vec<[u32; 3]>,
    pub face_normals: Vec<Vec3>,
}

impl TriangleMesh {
    /// Builds the mesh and its face normals. Zero-area faces get the normal `+z`.
    pub fn new(vertices: Vec<Vec3>, faces: Vec<[u32; 3]>) -> Result<Self> {
        let n = vertices.len() as u32;
        if let Some(f) = faces.iter().find(|f| f.iter().any(|&i| i >= n)) {
            return Err(Error::InvalidArgument(format!("face {f:?} indexes past {n} vertices")));
        }
        let face_normals = faces
            .iter()
            .map(|f| {
                let [a, b, c] = f.map(|i| vertices[i as usize]);
                let cross = (b - a).cross(&(c - a));
                let len = cross.norm();
                if len > AREA_EPS {
                    cross / len
                } else {
                    Vec3::z()
                }
            })
            .collect();
        Ok(Self { vertices, faces, face_normals })
    }

    pub fn is_empty(&self) -> bool {
        self.faces.is_empty()
    }

    pub fn triangle(&self, face: usize) -> [Vec3; 3] {
        self.faces[face].map(|i| self.vertices[i as usize])
    }

    pub fn face_area(&self, face: usize) -> f64 {
        let [a, b, c] = self.triangle(face);
        0.5 * (b - a).cross(&(c - a)).norm()
    }

    pub fn surface_area(&self) -> f64 {
        (0..self.faces.len()).map(|f| self.face_area(f)).sum()
    }

    pub fn transformed(&self, t: &RigidTransform) -> Self {
        Self {
            vertices: self.vertices.iter().map(|v| t.apply(v)).collect(),
            faces: self.faces.clone(),
            face_normals: self.face_normals.iter().map(|n| t.apply_vector(n)).collect(),
        }
    }

    /// Axis-aligned bounds `(min, max)`.
    pub fn bounds(&self) -> (Vec3, Vec3) {
        let mut lo = Vec3::repeat(f64::INFINITY);
        let mut hi = Vec3::repeat(f64::NEG_INFINITY);
        for v in &self.vertices {
            lo = lo.inf(v);
            hi = hi.sup(v);
        }
        (lo, hi)
    }

    /// Largest distance between any two vertices.
    pub fn diameter(&self) -> f64 {
        let mut best = 0.0f64;
        for (i, a) in self.vertices.iter().enumerate() {
            for b in &self.vertices[i + 1..] {
                best = best.max((a - b).norm_squared());
            }
        }
        best.sqrt()
    }

    /// Enclosed signed volume (positive for outward-facing closed meshes).
    pub fn volume(&self) -> f64 {
        self.faces
            .iter()
            .map(|f| {
                let [a, b, c] = f.map(|i| self.vertices[i as usize]);
                a.dot(&b.cross(&c)) / 6.0
            })
            .sum()
    }

    /// Centroid of the enclosed volume; falls back to the area-weighted surface
    /// centroid when the mesh encloses no volume.
    pub fn center_of_mass(&self) -> Vec3 {
        let mut vol = 0.0;
        let mut acc = Vec3::zeros();
        for f in &self.faces {
            let [a, b, c] = f.map(|i| self.vertices[i as usize]);
            let v = a.dot(&b.cross(&c)) / 6.0;
            vol += v;
            acc += v * (a + b + c) / 4.0;
        }
        if vol.abs() > 1e-15 {
            return acc / vol;
        }
        let mut area = 0.0;
        let mut acc = Vec3::zeros();
        for f in 0..self.faces.len() {
            let w = self.face_area(f);
            let [a, b, c] = self.triangle(f);
            area += w;
            acc += w * (a + b + c) / 3.0;
        }
        if area > 0.0 {
            acc / area
        } else {
            Vec3::zeros()
        }
    }
}

/// Samples `n` points uniformly over the mesh surface; each point carries the normal
/// of the face it was drawn from and its face index as label.
pub fn sample_mesh_surface(mesh: &TriangleMesh, n: usize, seed: u64) -> Result<PointCloud> {
    let mut cumulative = Vec::with_capacity(mesh.faces.len());
    let mut total = 0.0;
    for f in 0..mesh.faces.len() {
        total += mesh.face_area(f);
        cumulative.push(total);
    }
    if total <= AREA_EPS {
        return Err(Error::DegenerateMesh);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points = Vec::with_capacity(n);
    let mut normals = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        let u: f64 = rng.random::<f64>() * total;
        let face = cumulative.partition_point(|&c| c <= u).min(mesh.faces.len() - 1);
        let [a, b, c] = mesh.triangle(face);
        let (r1, r2): (f64, f64) = (rng.random(), rng.random());
        let s = r1.sqrt();
        points.push(a * (1.0 - s) + b * (s * (1.0 - r2)) + c * (s * r2));
        normals.push(mesh.face_normals[face]);
        labels.push(face as u32);
    }
    Ok(PointCloud { points, normals: Some(normals), labels: Some(labels) })
}
