use serde::{Deserialize, Serialize};

use crate::geometry::Vec3;
use crate::{Error, Result};

/// Pinhole camera. Pixel `(i, j)` covers `[i, i + 1) x [j, j + 1)` in image coordinates,
/// so its center sits at `(i + 0.5, j + 0.5)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CameraIntrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: usize,
    pub height: usize,
}

impl CameraIntrinsics {
    pub fn new(fx: f64, fy: f64, cx: f64, cy: f64, width: usize, height: usize) -> Result<Self> {
        let cam = Self { fx, fy, cx, cy, width, height };
        cam.validate()?;
        Ok(cam)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.fx > 0.0 && self.fy > 0.0) || !self.fx.is_finite() || !self.fy.is_finite() {
            return Err(Error::InvalidArgument(format!("focal lengths must be positive, got fx={} fy={}", self.fx, self.fy)));
        }
        if self.width == 0 || self.height == 0 {
            return Err(Error::InvalidArgument("image size must be positive".into()));
        }
        if !(0.0..=self.width as f64).contains(&self.cx) || !(0.0..=self.height as f64).contains(&self.cy) {
            return Err(Error::InvalidArgument(format!("principal point ({}, {}) outside the image", self.cx, self.cy)));
        }
        Ok(())
    }

    /// Projects a camera-frame point to continuous image coordinates.
    pub fn project(&self, p: &Vec3) -> (f64, f64) {
        (self.fx * p.x / p.z + self.cx, self.fy * p.y / p.z + self.cy)
    }

    /// Camera-frame point seen at the center of pixel `(i, j)` with depth `z`.
    pub fn backproject(&self, i: usize, j: usize, z: f64) -> Vec3 {
        let u = i as f64 + 0.5;
        let v = j as f64 + 0.5;
        Vec3::new((u - self.cx) / self.fx * z, (v - self.cy) / self.fy * z, z)
    }
}

/// Row-major image.
#[derive(Clone, Debug, PartialEq)]
pub struct Image<T> {
    width: usize,
    height: usize,
    data: Vec<T>,
}

/// Depth in meters, 0 where nothing was hit.
pub type DepthImage = Image<f64>;
/// Unit camera-frame normals, zero where nothing was hit.
pub type NormalImage = Image<Vec3>;
/// Instance labels, 0 for background.
pub type LabelImage = Image<u16>;
pub type Mask = Image<bool>;

impl<T: Clone> Image<T> {
    pub fn new(width: usize, height: usize, fill: T) -> Self {
        Self { width, height, data: vec![fill; width * height] }
    }

    pub fn from_vec(width: usize, height: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::ShapeMismatch(format!("{} pixels for a {width}x{height} image", data.len())));
        }
        Ok(Self { width, height, data })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn get(&self, i: usize, j: usize) -> &T {
        &self.data[j * self.width + i]
    }

    pub fn set(&mut self, i: usize, j: usize, value: T) {
        self.data[j * self.width + i] = value;
    }

    pub fn same_shape<U>(&self, other: &Image<U>) -> bool {
        self.width == other.width && self.height == other.height
    }

    pub fn map<U: Clone>(&self, f: impl FnMut(&T) -> U) -> Image<U> {
        Image { width: self.width, height: self.height, data: self.data.iter().map(f).collect() }
    }
}

impl Mask {
    pub fn count(&self) -> usize {
        self.data.iter().filter(|&&b| b).count()
    }
}

impl LabelImage {
    pub fn mask_of(&self, label: u16) -> Mask {
        self.map(|&l| l == label)
    }
}

/// Back-projects every pixel with positive depth, returning `(pixel index, point)` pairs.
pub fn backproject_depth(depth: &DepthImage, cam: &CameraIntrinsics) -> Vec<(usize, Vec3)> {
    let mut out = Vec::new();
    for j in 0..depth.height() {
        for i in 0..depth.width() {
            let z = *depth.get(i, j);
            if z > 0.0 {
                out.push((j * depth.width() + i, cam.backproject(i, j, z)));
            }
        }
    }
    out
}
