use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::geometry::{estimate_normals, PointCloud, Vec3, DEFAULT_NORMAL_NEIGHBORS};
use crate::scoring::{CameraIntrinsics, DepthImage, LabelImage, Mask, NormalImage};
use crate::{Error, Result};

/// Pixels added around the mask's bounding box on each side, as a fraction of its size.
const BOX_MARGIN_FRACTION: f64 = 0.25;
const BOX_MARGIN_MIN: usize = 10;

/// `(foreground, background)` counts for fraction `p` of `n` points.
pub fn split_counts(p: f64, n: usize) -> (usize, usize) {
    let fg = ((p * n as f64) - 1e-9).ceil().max(0.0) as usize;
    (fg.min(n), n - fg.min(n))
}

/// Foreground pixels of `object` and valid-depth background pixels inside the mask's
/// bounding box (enlarged by a margin), in row-major order.
pub fn segmentation_candidates(labels: &LabelImage, depth: &DepthImage, object: u16) -> (Vec<usize>, Vec<usize>) {
    let w = labels.width();
    let fg: Vec<usize> = (0..labels.len()).filter(|&i| labels.data()[i] == object && depth.data()[i] > 0.0).collect();
    if fg.is_empty() {
        return (fg, vec![]);
    }
    let (mut i0, mut i1, mut j0, mut j1) = (usize::MAX, 0, usize::MAX, 0);
    for &p in &fg {
        i0 = i0.min(p % w);
        i1 = i1.max(p % w);
        j0 = j0.min(p / w);
        j1 = j1.max(p / w);
    }
    let mi = BOX_MARGIN_MIN.max((BOX_MARGIN_FRACTION * (i1 - i0 + 1) as f64) as usize);
    let mj = BOX_MARGIN_MIN.max((BOX_MARGIN_FRACTION * (j1 - j0 + 1) as f64) as usize);
    let (i0, i1) = (i0.saturating_sub(mi), (i1 + mi).min(w - 1));
    let (j0, j1) = (j0.saturating_sub(mj), (j1 + mj).min(labels.height() - 1));
    let mut bg = Vec::new();
    for j in j0..=j1 {
        for i in i0..=i1 {
            let idx = j * w + i;
            if labels.data()[idx] != object && depth.data()[idx] > 0.0 {
                bg.push(idx);
            }
        }
    }
    (fg, bg)
}

/// Largest `m <= n` whose split fits the available candidates.
pub fn feasible_points(fg_available: usize, bg_available: usize, p: f64, n: usize, presample: usize) -> usize {
    let (fa, ba) = (fg_available.min(presample), bg_available.min(presample));
    (0..=n).rev().find(|&m| {
        let (f, b) = split_counts(p, m);
        f <= fa && b <= ba
    }).unwrap_or(0)
}

fn presampled(cands: &[usize], presample: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    if cands.len() <= presample {
        return cands.to_vec();
    }
    let mut idx = sample(rng, cands.len(), presample).into_vec();
    idx.sort_unstable();
    idx.into_iter().map(|i| cands[i]).collect()
}

fn nearest(cands: &[usize], center: (f64, f64), count: usize, width: usize) -> Vec<usize> {
    let mut keyed: Vec<(f64, usize)> = cands
        .iter()
        .map(|&c| {
            let (di, dj) = ((c % width) as f64 - center.0, (c / width) as f64 - center.1);
            (di * di + dj * dj, c)
        })
        .collect();
    keyed.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    keyed.into_iter().take(count).map(|(_, c)| c).collect()
}

/// Simulated segmentation: picks a random pixel of the object's mask, then the `ceil(p n)`
/// nearest foreground and `floor((1 - p) n)` nearest background pixels (image distance),
/// each drawn from up to `presample` candidates. Returns foreground pixels then background.
pub fn augment_segmentation(
    labels: &LabelImage,
    depth: &DepthImage,
    object: u16,
    p: f64,
    n: usize,
    presample: usize,
    seed: u64,
) -> Result<Vec<usize>> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidArgument(format!("foreground fraction {p} outside [0, 1]")));
    }
    if !labels.same_shape(depth) {
        return Err(Error::ShapeMismatch("labels and depth differ in size".into()));
    }
    let (fg_all, bg_all) = segmentation_candidates(labels, depth, object);
    if fg_all.is_empty() {
        return Err(Error::NoForeground(object as usize));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let fg = presampled(&fg_all, presample, &mut rng);
    let bg = presampled(&bg_all, presample, &mut rng);
    let (nf, nb) = split_counts(p, n);
    if nf > fg.len() {
        return Err(Error::InsufficientCandidates { requested: nf, available: fg.len() });
    }
    if nb > bg.len() {
        return Err(Error::InsufficientCandidates { requested: nb, available: bg.len() });
    }
    let c = fg_all[rng.random_range(0..fg_all.len())];
    let w = labels.width();
    let center = ((c % w) as f64, (c / w) as f64);
    let mut out = nearest(&fg, center, nf, w);
    out.extend(nearest(&bg, center, nb, w));
    Ok(out)
}

/// Back-projects the chosen pixels into a camera-frame cloud labeled with the per-pixel
/// instance labels. Normals come from the normal image where available, otherwise they
/// are estimated from the cloud.
pub fn source_from_pixels(
    pixels: &[usize],
    depth: &DepthImage,
    normals: Option<&NormalImage>,
    labels: &LabelImage,
    cam: &CameraIntrinsics,
) -> Result<PointCloud> {
    let w = depth.width();
    let points: Vec<Vec3> = pixels.iter().map(|&p| cam.backproject(p % w, p / w, depth.data()[p])).collect();
    let point_labels: Vec<u32> = pixels.iter().map(|&p| labels.data()[p] as u32).collect();
    let mut cloud = PointCloud { points, normals: None, labels: Some(point_labels) };
    match normals {
        Some(img) if pixels.iter().all(|&p| img.data()[p].norm() > 0.5) => {
            cloud.normals = Some(pixels.iter().map(|&p| img.data()[p]).collect());
        }
        _ if cloud.len() >= DEFAULT_NORMAL_NEIGHBORS => {
            cloud.normals = estimate_normals(&cloud, DEFAULT_NORMAL_NEIGHBORS, &Vec3::zeros())?.normals;
        }
        _ => {}
    }
    Ok(cloud)
}

/// Pixel mask of the given indices.
pub fn pixel_mask(width: usize, height: usize, pixels: &[usize]) -> Mask {
    let mut m = Mask::new(width, height, false);
    for &p in pixels {
        m.data_mut()[p] = true;
    }
    m
}
