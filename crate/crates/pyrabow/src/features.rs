//! Dense keypoint grids and SIFT-style gradient-orientation descriptors.
//!
//! Descriptors are upright (no dominant-orientation assignment): the grid has
//! no orientation to align to, and losing scale/rotation covariance is the
//! accepted trade-off of the dense representation. Each descriptor covers a
//! square patch split into 4x4 spatial cells with 8 orientation bins per
//! cell, giving the usual 128 components.

use serde::{Deserialize, Serialize};

use crate::dataset::GrayImage;
use crate::error::{Error, Result};
use crate::par;

/// Number of components of a descriptor: 4x4 spatial cells x 8 orientation bins.
pub const DESCRIPTOR_DIM: usize = 128;

const SPATIAL_CELLS: usize = 4;
const ORIENTATION_BINS: usize = 8;
/// Component clip applied between the two L2 normalization passes.
const CLIP_THRESHOLD: f64 = 0.2;

/// Parameters of the dense sampling grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseGridSpec {
    /// Pixels between neighboring keypoints.
    pub step: usize,
    /// Descriptor support side length in pixels (at scale 1.0).
    pub patch: usize,
    /// Patch-size multipliers; each scale contributes its own grid.
    pub scales: Vec<f32>,
}

impl Default for DenseGridSpec {
    fn default() -> Self {
        DenseGridSpec {
            step: 8,
            patch: 16,
            scales: vec![1.0],
        }
    }
}

impl DenseGridSpec {
    pub fn validate(&self) -> Result<()> {
        if self.step < 1 {
            return Err(Error::invalid("grid step must be >= 1"));
        }
        if self.patch < 8 {
            return Err(Error::invalid("patch side must be >= 8 pixels"));
        }
        if self.scales.is_empty() || self.scales.iter().any(|&s| !(s > 0.0)) {
            return Err(Error::invalid("scales must be non-empty and positive"));
        }
        Ok(())
    }
}

/// A grid sample point. The scaled patch around it lies inside the image.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Keypoint {
    pub x: f32,
    pub y: f32,
    pub scale: f32,
}

/// 128-component non-negative descriptor, unit norm unless degenerate.
#[derive(Debug, Clone, PartialEq)]
pub struct Descriptor {
    pub values: [f32; DESCRIPTOR_DIM],
}

impl Default for Descriptor {
    fn default() -> Self {
        Descriptor {
            values: [0.0; DESCRIPTOR_DIM],
        }
    }
}

impl Descriptor {
    pub fn as_slice(&self) -> &[f32] {
        &self.values
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }
}

/// Gradient magnitude and orientation per pixel, orientation in `[0, 2pi)`.
#[derive(Debug, Clone)]
pub struct GradientField {
    pub width: usize,
    pub height: usize,
    pub magnitude: Vec<f32>,
    pub orientation: Vec<f32>,
}

impl GradientField {
    #[inline]
    fn at(&self, x: usize, y: usize) -> (f32, f32) {
        let i = y * self.width + x;
        (self.magnitude[i], self.orientation[i])
    }
}

/// Grid positions for every scale: margin `ceil(patch*s/2)`, then every
/// `step` pixels while the scaled patch still fits. Row-major per scale,
/// scales in spec order.
pub fn dense_keypoints(width: usize, height: usize, spec: &DenseGridSpec) -> Vec<Keypoint> {
    let mut out = Vec::new();
    for &scale in &spec.scales {
        let side = spec.patch as f32 * scale;
        let half = side / 2.0;
        let margin = half.ceil() as usize;
        let fits = |pos: usize, extent: usize| pos as f32 + half <= extent as f32;
        if !fits(margin, width) || !fits(margin, height) {
            continue;
        }
        let mut ys = Vec::new();
        let mut y = margin;
        while fits(y, height) {
            ys.push(y);
            y += spec.step;
        }
        let mut xs = Vec::new();
        let mut x = margin;
        while fits(x, width) {
            xs.push(x);
            x += spec.step;
        }
        for &y in &ys {
            for &x in &xs {
                out.push(Keypoint {
                    x: x as f32,
                    y: y as f32,
                    scale,
                });
            }
        }
    }
    out
}

/// Central differences in the interior, one-sided at the borders.
pub fn image_gradients(img: &GrayImage) -> Result<GradientField> {
    let (w, h) = (img.width, img.height);
    if w < 2 || h < 2 {
        return Err(Error::invalid(format!(
            "gradients need at least 2x2 pixels, got {w}x{h}"
        )));
    }
    let mut magnitude = vec![0f32; w * h];
    let mut orientation = vec![0f32; w * h];
    for y in 0..h {
        for x in 0..w {
            let dx = if x == 0 {
                img.get(1, y) - img.get(0, y)
            } else if x == w - 1 {
                img.get(w - 1, y) - img.get(w - 2, y)
            } else {
                (img.get(x + 1, y) - img.get(x - 1, y)) * 0.5
            };
            let dy = if y == 0 {
                img.get(x, 1) - img.get(x, 0)
            } else if y == h - 1 {
                img.get(x, h - 1) - img.get(x, h - 2)
            } else {
                (img.get(x, y + 1) - img.get(x, y - 1)) * 0.5
            };
            let i = y * w + x;
            magnitude[i] = (dx * dx + dy * dy).sqrt();
            let mut theta = dy.atan2(dx);
            if theta < 0.0 {
                theta += std::f32::consts::TAU;
            }
            // atan2 can return exactly -0.0 -> TAU after the shift
            if theta >= std::f32::consts::TAU {
                theta = 0.0;
            }
            orientation[i] = theta;
        }
    }
    Ok(GradientField {
        width: w,
        height: h,
        magnitude,
        orientation,
    })
}

/// Raw 4x4x8 histogram of Gaussian-weighted gradient magnitudes with
/// trilinear soft-binning, before any normalization.
///
/// Pixel centers sit at `(px + 0.5, py + 0.5)`; the patch window is
/// `[kp - side/2, kp + side/2)` on each axis, which keeps the histogram
/// exactly symmetric under image flips.
fn raw_histogram(
    grads: &GradientField,
    kp: &Keypoint,
    patch: usize,
) -> Result<[f64; DESCRIPTOR_DIM]> {
    let side = patch as f64 * kp.scale as f64;
    let half = side / 2.0;
    let (kx, ky) = (kp.x as f64, kp.y as f64);

    // integer pixel range whose centers fall inside the window
    let px0 = (kx - half - 0.5).ceil() as i64;
    let px1 = (kx + half - 0.5).ceil() as i64 - 1;
    let py0 = (ky - half - 0.5).ceil() as i64;
    let py1 = (ky + half - 0.5).ceil() as i64 - 1;
    if px0 < 0 || py0 < 0 || px1 >= grads.width as i64 || py1 >= grads.height as i64 {
        return Err(Error::invalid(format!(
            "patch around ({}, {}) at scale {} exceeds the {}x{} image",
            kp.x, kp.y, kp.scale, grads.width, grads.height
        )));
    }

    let sigma = side / 2.0;
    let inv_two_sigma_sq = 1.0 / (2.0 * sigma * sigma);
    let cell_size = side / SPATIAL_CELLS as f64;
    let bin_per_rad = ORIENTATION_BINS as f64 / std::f64::consts::TAU;

    let mut hist = [0f64; DESCRIPTOR_DIM];
    for py in py0..=py1 {
        for px in px0..=px1 {
            let (mag, ori) = grads.at(px as usize, py as usize);
            if mag == 0.0 {
                continue;
            }
            let cx = px as f64 + 0.5;
            let cy = py as f64 + 0.5;
            let dx = cx - kx;
            let dy = cy - ky;
            let weight = (-(dx * dx + dy * dy) * inv_two_sigma_sq).exp();
            let contrib = mag as f64 * weight;

            // cell coordinates in [-0.5, 3.5)
            let u = (cx - (kx - half)) / cell_size - 0.5;
            let v = (cy - (ky - half)) / cell_size - 0.5;
            let ob = ori as f64 * bin_per_rad;

            let u0 = u.floor();
            let v0 = v.floor();
            let o0 = ob.floor();
            let fu = u - u0;
            let fv = v - v0;
            let fo = ob - o0;

            for (du, wu) in [(0i64, 1.0 - fu), (1, fu)] {
                let col = u0 as i64 + du;
                if !(0..SPATIAL_CELLS as i64).contains(&col) || wu == 0.0 {
                    continue;
                }
                for (dv, wv) in [(0i64, 1.0 - fv), (1, fv)] {
                    let row = v0 as i64 + dv;
                    if !(0..SPATIAL_CELLS as i64).contains(&row) || wv == 0.0 {
                        continue;
                    }
                    for (do_, wo) in [(0i64, 1.0 - fo), (1, fo)] {
                        let bin = (o0 as i64 + do_).rem_euclid(ORIENTATION_BINS as i64);
                        let idx = (row as usize * SPATIAL_CELLS + col as usize)
                            * ORIENTATION_BINS
                            + bin as usize;
                        hist[idx] += contrib * wu * wv * wo;
                    }
                }
            }
        }
    }
    Ok(hist)
}

fn l2_norm(values: &[f64]) -> f64 {
    values.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Descriptor at a keypoint: Gaussian-weighted trilinear histogram,
/// L2-normalize, clip components at 0.2, re-L2-normalize. A patch with no
/// gradient energy yields the all-zero descriptor.
pub fn sift_descriptor(grads: &GradientField, kp: &Keypoint, patch: usize) -> Result<Descriptor> {
    let mut hist = raw_histogram(grads, kp, patch)?;
    let norm = l2_norm(&hist);
    if norm == 0.0 {
        return Ok(Descriptor::default());
    }
    for v in hist.iter_mut() {
        *v = (*v / norm).min(CLIP_THRESHOLD);
    }
    let norm2 = l2_norm(&hist);
    let mut values = [0f32; DESCRIPTOR_DIM];
    for (out, v) in values.iter_mut().zip(hist.iter()) {
        *out = (*v / norm2) as f32;
    }
    Ok(Descriptor { values })
}

/// One descriptor per grid keypoint, in grid order.
pub fn extract_dense(img: &GrayImage, spec: &DenseGridSpec) -> Result<Vec<(Keypoint, Descriptor)>> {
    spec.validate()?;
    let keypoints = dense_keypoints(img.width, img.height, spec);
    if keypoints.is_empty() {
        return Ok(Vec::new());
    }
    let grads = image_gradients(img)?;
    let descriptors: Vec<Result<Descriptor>> =
        par::map_ordered(&keypoints, |kp| sift_descriptor(&grads, kp, spec.patch));
    keypoints
        .into_iter()
        .zip(descriptors)
        .map(|(kp, d)| d.map(|d| (kp, d)))
        .collect()
}
