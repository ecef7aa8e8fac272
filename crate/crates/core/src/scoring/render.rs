use crate::geometry::{RigidTransform, TriangleMesh, Vec3};
use crate::{Error, Result};

use super::{CameraIntrinsics, DepthImage, LabelImage, NormalImage};

/// Triangles with a vertex closer than this to the camera plane are skipped.
const NEAR_PLANE: f64 = 1e-4;

fn edge(a: (f64, f64), b: (f64, f64), p: (f64, f64)) -> f64 {
    (b.0 - a.0) * (p.1 - a.1) - (b.1 - a.1) * (p.0 - a.0)
}

/// Z-buffer over any number of meshes.
#[derive(Clone, Debug)]
pub struct Rasterizer {
    cam: CameraIntrinsics,
    depth: DepthImage,
    normals: NormalImage,
    labels: LabelImage,
}

impl Rasterizer {
    pub fn new(cam: CameraIntrinsics) -> Self {
        Self {
            cam,
            depth: DepthImage::new(cam.width, cam.height, 0.0),
            normals: NormalImage::new(cam.width, cam.height, Vec3::zeros()),
            labels: LabelImage::new(cam.width, cam.height, 0),
        }
    }

    /// Draws `mesh` placed by `pose` (model to camera), tagging covered pixels with `label`.
    pub fn draw(&mut self, mesh: &TriangleMesh, pose: &RigidTransform, label: u16) {
        let verts: Vec<Vec3> = mesh.vertices.iter().map(|v| pose.apply(v)).collect();
        for (f, face) in mesh.faces.iter().enumerate() {
            let p = [verts[face[0] as usize], verts[face[1] as usize], verts[face[2] as usize]];
            if p.iter().any(|v| v.z <= NEAR_PLANE) {
                continue;
            }
            let mut n = pose.apply_vector(&mesh.face_normals[f]);
            if n.dot(&(p[0] + p[1] + p[2])) > 0.0 {
                n = -n;
            }
            self.draw_triangle(&p, &n, label);
        }
    }

    fn draw_triangle(&mut self, p: &[Vec3; 3], normal: &Vec3, label: u16) {
        let s = [self.cam.project(&p[0]), self.cam.project(&p[1]), self.cam.project(&p[2])];
        let area = edge(s[0], s[1], s[2]);
        if area.abs() < 1e-12 {
            return;
        }
        let (w, h) = (self.cam.width as f64, self.cam.height as f64);
        let umin = s.iter().map(|q| q.0).fold(f64::INFINITY, f64::min);
        let umax = s.iter().map(|q| q.0).fold(f64::NEG_INFINITY, f64::max);
        let vmin = s.iter().map(|q| q.1).fold(f64::INFINITY, f64::min);
        let vmax = s.iter().map(|q| q.1).fold(f64::NEG_INFINITY, f64::max);
        if umax < 0.0 || vmax < 0.0 || umin > w || vmin > h {
            return;
        }
        let i0 = (umin - 0.5).ceil().max(0.0) as usize;
        let i1 = ((umax - 0.5).floor().min(w - 1.0)).max(-1.0);
        let j0 = (vmin - 0.5).ceil().max(0.0) as usize;
        let j1 = ((vmax - 0.5).floor().min(h - 1.0)).max(-1.0);
        if i1 < 0.0 || j1 < 0.0 {
            return;
        }
        let inv_z = [1.0 / p[0].z, 1.0 / p[1].z, 1.0 / p[2].z];
        for j in j0..=j1 as usize {
            for i in i0..=i1 as usize {
                let q = (i as f64 + 0.5, j as f64 + 0.5);
                let b0 = edge(s[1], s[2], q) / area;
                let b1 = edge(s[2], s[0], q) / area;
                let b2 = edge(s[0], s[1], q) / area;
                if b0 < 0.0 || b1 < 0.0 || b2 < 0.0 {
                    continue;
                }
                let z = 1.0 / (b0 * inv_z[0] + b1 * inv_z[1] + b2 * inv_z[2]);
                let idx = j * self.cam.width + i;
                let current = self.depth.data()[idx];
                if current == 0.0 || z < current {
                    self.depth.data_mut()[idx] = z;
                    self.normals.data_mut()[idx] = *normal;
                    self.labels.data_mut()[idx] = label;
                }
            }
        }
    }

    pub fn depth(&self) -> &DepthImage {
        &self.depth
    }

    pub fn finish(self) -> (DepthImage, NormalImage, LabelImage) {
        (self.depth, self.normals, self.labels)
    }
}

/// Depth and normal images of a single mesh under `pose`.
pub fn render(mesh: &TriangleMesh, pose: &RigidTransform, cam: &CameraIntrinsics) -> Result<(DepthImage, NormalImage)> {
    if mesh.is_empty() {
        return Err(Error::DegenerateMesh);
    }
    let mut r = Rasterizer::new(*cam);
    r.draw(mesh, pose, 1);
    let (d, n, _) = r.finish();
    Ok((d, n))
}
