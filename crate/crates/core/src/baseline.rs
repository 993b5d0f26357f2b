//! Directional matched-filter detector used as a comparison point.
//!
//! This is a simplified stand-in for the multi-direction filtering detector
//! the proposed method is compared against, not a reimplementation of it: a
//! bank of zero-mean line kernels, per-direction non-maximum suppression, a
//! threshold on the best response and 8-connected labelling. It exists for
//! relative timing and for contrasting behaviour on stripe noise.
//!
//! Each kernel is `(l - mean(l)) / norm` where `l` is an antialiased line
//! through the kernel centre. The response is evaluated as the sparse line
//! correlation minus the mean times a box sum from an integral image, which is
//! exactly the dense correlation with the zero-mean kernel.

use rayon::prelude::*;

use crate::detector::{connected_components, filter_components, Component, DEFAULT_MIN_SIZE};
use crate::error::{Error, Result};
use crate::image::{Frame, Mask};

pub const DEFAULT_KERNEL_SIZE: usize = 15;
pub const DEFAULT_DIRECTIONS: usize = 15;
pub const DEFAULT_NMS_RADIUS: usize = 2;
/// Response threshold in units of the response spread on pure noise.
pub const THRESHOLD_SIGMAS: f64 = 5.0;

#[derive(Debug, Clone, PartialEq)]
pub struct DirectionalKernel {
    pub angle_deg: f64,
    pub size: usize,
    /// Dense zero-mean, unit-norm coefficients in raster order.
    pub coefficients: Vec<f64>,
    taps: Vec<(i64, i64, f64)>,
    mean: f64,
    norm: f64,
}

impl DirectionalKernel {
    fn new(size: usize, angle_deg: f64) -> Self {
        let h = (size / 2) as f64;
        let t = angle_deg.to_radians();
        let (c, s) = (t.cos(), t.sin());
        let mut line = vec![0.0; size * size];
        for j in 0..size {
            for i in 0..size {
                let (dx, dy) = (i as f64 - h, j as f64 - h);
                let along = dx * c + dy * s;
                let across = (-dx * s + dy * c).abs();
                if along.abs() <= h {
                    line[j * size + i] = (1.0 - across).max(0.0);
                }
            }
        }
        let n = (size * size) as f64;
        let mean = line.iter().sum::<f64>() / n;
        let norm = line.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>().sqrt();
        let coefficients = line.iter().map(|v| (v - mean) / norm).collect();
        let taps = line
            .iter()
            .enumerate()
            .filter(|(_, v)| **v > 0.0)
            .map(|(k, v)| ((k % size) as i64 - h as i64, (k / size) as i64 - h as i64, *v))
            .collect();
        Self { angle_deg, size, coefficients, taps, mean, norm }
    }

    /// Unit normal of the line, used for non-maximum suppression.
    fn normal(&self) -> (f64, f64) {
        let t = self.angle_deg.to_radians();
        (-t.sin(), t.cos())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DirectionalBank {
    pub kernels: Vec<DirectionalKernel>,
}

impl DirectionalBank {
    pub fn kernel_size(&self) -> usize {
        self.kernels.first().map_or(0, |k| k.size)
    }
}

/// `count` kernels at angles `i * 180 / count` degrees.
pub fn build_bank(kernel_size: usize, count: usize) -> Result<DirectionalBank> {
    if kernel_size < 3 || kernel_size.is_multiple_of(2) || count == 0 {
        return Err(Error::InvalidParameter(format!(
            "kernel size {kernel_size} must be odd and at least 3, count {count} positive"
        )));
    }
    let step = 180.0 / count as f64;
    Ok(DirectionalBank { kernels: (0..count).map(|i| DirectionalKernel::new(kernel_size, i as f64 * step)).collect() })
}

/// Summed-area table with one row and column of zero padding.
struct Integral {
    w: usize,
    data: Vec<f64>,
}

impl Integral {
    fn new(frame: &Frame) -> Self {
        let (w, h) = (frame.width() + 1, frame.height() + 1);
        let mut data = vec![0.0; w * h];
        for y in 1..h {
            let mut row = 0.0;
            for x in 1..w {
                row += frame.get(x - 1, y - 1);
                data[y * w + x] = data[(y - 1) * w + x] + row;
            }
        }
        Self { w, data }
    }

    /// Sum over `[x0, x1) × [y0, y1)`.
    fn sum(&self, x0: usize, y0: usize, x1: usize, y1: usize) -> f64 {
        let w = self.w;
        self.data[y1 * w + x1] - self.data[y0 * w + x1] - self.data[y1 * w + x0] + self.data[y0 * w + x0]
    }
}

/// Correlation of `frame` with one kernel; pixels whose window leaves the
/// frame get 0.
fn respond(frame: &Frame, integral: &Integral, k: &DirectionalKernel) -> Vec<f64> {
    let (w, h) = (frame.width(), frame.height());
    let r = k.size / 2;
    let data = frame.data();
    let mut out = vec![0.0; w * h];
    out.par_chunks_mut(w).enumerate().skip(r).take(h.saturating_sub(2 * r)).for_each(|(y, row)| {
        for (x, o) in row.iter_mut().enumerate().skip(r).take(w - 2 * r) {
            let mut acc = 0.0;
            for &(dx, dy, v) in &k.taps {
                let idx = (y as i64 + dy) as usize * w + (x as i64 + dx) as usize;
                acc += v * data[idx];
            }
            let boxed = integral.sum(x - r, y - r, x + r + 1, y + r + 1);
            *o = (acc - k.mean * boxed) / k.norm;
        }
    });
    out
}

/// Per-direction responses, indexed `[direction][y * width + x]`.
pub fn filter_responses(frame: &Frame, bank: &DirectionalBank) -> Result<Vec<Vec<f64>>> {
    let size = bank.kernel_size();
    if frame.width() <= size || frame.height() <= size {
        return Err(Error::FrameTooSmall { width: frame.width(), height: frame.height(), min: size + 1 });
    }
    let integral = Integral::new(frame);
    Ok(bank.kernels.iter().map(|k| respond(frame, &integral, k)).collect())
}

/// Spread of the filter responses over the valid interior of `noise`, pooled
/// across directions.
pub fn response_sigma(noise: &Frame, bank: &DirectionalBank) -> Result<f64> {
    let responses = filter_responses(noise, bank)?;
    let r = bank.kernel_size() / 2;
    let (w, h) = (noise.width(), noise.height());
    let (mut n, mut s, mut sq) = (0.0, 0.0, 0.0);
    for resp in &responses {
        for y in r..h - r {
            for v in &resp[y * w + r..y * w + w - r] {
                n += 1.0;
                s += v;
                sq += v * v;
            }
        }
    }
    let mean = s / n;
    Ok((sq / n - mean * mean).max(0.0).sqrt())
}

#[derive(Debug, Clone, PartialEq)]
pub struct BaselineDetector {
    pub bank: DirectionalBank,
    pub nms_radius: usize,
    pub response_threshold: f64,
    pub min_size: usize,
}

impl BaselineDetector {
    /// Default bank with the threshold set to five response sigmas measured
    /// on `noise`.
    pub fn calibrated(noise: &Frame) -> Result<Self> {
        let bank = build_bank(DEFAULT_KERNEL_SIZE, DEFAULT_DIRECTIONS)?;
        let sigma = response_sigma(noise, &bank)?;
        Ok(Self {
            bank,
            nms_radius: DEFAULT_NMS_RADIUS,
            response_threshold: THRESHOLD_SIGMAS * sigma,
            min_size: DEFAULT_MIN_SIZE,
        })
    }

    pub fn detect(&self, frame: &Frame) -> Result<Vec<Component>> {
        baseline_detect(frame, &self.bank, self.nms_radius, self.response_threshold, self.min_size)
    }
}

/// Filters with every kernel, keeps the best response per pixel, thresholds
/// it, and keeps the 8-connected regions that contain a ridge pixel (a local
/// maximum across its own direction within `nms_radius`) and have at least
/// `min_size` pixels.
pub fn baseline_detect(
    frame: &Frame,
    bank: &DirectionalBank,
    nms_radius: usize,
    response_threshold: f64,
    min_size: usize,
) -> Result<Vec<Component>> {
    let responses = filter_responses(frame, bank)?;
    let (w, h) = (frame.width(), frame.height());
    let mut best = vec![f64::NEG_INFINITY; w * h];
    let mut best_dir = vec![0usize; w * h];
    for (d, resp) in responses.iter().enumerate() {
        for (i, v) in resp.iter().enumerate() {
            if *v > best[i] {
                best[i] = *v;
                best_dir[i] = d;
            }
        }
    }
    let above: Vec<bool> = best.iter().map(|v| *v >= response_threshold).collect();
    let mask = Mask::from_vec(w, h, above)?;

    let is_ridge = |x: usize, y: usize| {
        let i = y * w + x;
        let d = best_dir[i];
        let (nx, ny) = bank.kernels[d].normal();
        let v = responses[d][i];
        (1..=nms_radius as i64).all(|s| {
            [-1.0, 1.0].iter().all(|sign| {
                let qx = (x as f64 + sign * s as f64 * nx).round() as i64;
                let qy = (y as f64 + sign * s as f64 * ny).round() as i64;
                if qx < 0 || qy < 0 || qx >= w as i64 || qy >= h as i64 {
                    return true;
                }
                responses[d][qy as usize * w + qx as usize] <= v
            })
        })
    };

    let components = connected_components(&mask)
        .into_iter()
        .filter(|c| c.pixels().iter().any(|&(x, y)| is_ridge(x, y)))
        .collect();
    Ok(filter_components(components, min_size))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::image::{gaussian_background, NoiseParams};

    #[test]
    fn single_horizontal_kernel() {
        let bank = build_bank(15, 1).unwrap();
        let k = &bank.kernels[0];
        // the centre row carries the only positive coefficients
        for (i, v) in k.coefficients.iter().enumerate() {
            assert_eq!(*v > 0.0, i / 15 == 7, "{i}");
        }
    }

    #[test]
    fn kernels_are_zero_mean_unit_norm() {
        let bank = build_bank(15, 15).unwrap();
        assert_eq!(bank.kernels.len(), 15);
        for k in &bank.kernels {
            let s: f64 = k.coefficients.iter().sum();
            let n: f64 = k.coefficients.iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!(s.abs() < 1e-9 && (n - 1.0).abs() < 1e-9);
        }
        let a = DirectionalKernel::new(15, 24.0);
        let b = DirectionalKernel::new(15, 204.0);
        for (p, q) in a.coefficients.iter().zip(&b.coefficients) {
            assert!((p - q).abs() < 1e-12);
        }
    }

    #[test]
    fn sparse_response_equals_dense_correlation() {
        let f = gaussian_background(40, 36, NoiseParams::standard(3)).unwrap();
        let bank = build_bank(15, 4).unwrap();
        let resp = filter_responses(&f, &bank).unwrap();
        for (k, r) in bank.kernels.iter().zip(&resp) {
            for (x, y) in [(7, 7), (20, 18), (32, 28)] {
                let mut dense = 0.0;
                for j in 0..15 {
                    for i in 0..15 {
                        dense += k.coefficients[j * 15 + i] * f.get(x + i - 7, y + j - 7);
                    }
                }
                assert!((dense - r[y * 40 + x]).abs() < 1e-9, "{dense} {}", r[y * 40 + x]);
            }
        }
    }

    #[test]
    fn noise_response_sigma_matches_noise() {
        let f = gaussian_background(128, 128, NoiseParams::standard(9)).unwrap();
        let s = response_sigma(&f, &build_bank(15, 15).unwrap()).unwrap();
        assert!((s - 8.0).abs() < 0.5, "{s}");
    }

    #[test]
    fn too_small_and_bad_bank() {
        assert!(build_bank(14, 15).is_err());
        assert!(build_bank(15, 0).is_err());
        let bank = build_bank(15, 15).unwrap();
        assert!(baseline_detect(&Frame::filled(15, 40, 1.0).unwrap(), &bank, 2, 1.0, 35).is_err());
    }
}
