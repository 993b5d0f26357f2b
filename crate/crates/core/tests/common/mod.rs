#![allow(dead_code)]

use std::collections::VecDeque;
use std::sync::OnceLock;

use statrs::function::erf::erfc;
use streaklite::classifier::{train, LabeledRow, LinearModel, TrainConfig};
use streaklite::dataset::{generate_rows, DatasetConfig};
use streaklite::image::{gaussian_background, Frame, Mask, NoiseParams};
use streaklite::sim::{calibrate_intensity, synthesize, Scene, StreakParams, IDEAL_MASK_THRESHOLD};

pub const TRAINING_ROWS: usize = 130_000;
pub const TRAINING_SEED: u64 = 1;

/// Rows of the default recipe, generated once per test binary.
pub fn training_rows() -> &'static [LabeledRow] {
    static ROWS: OnceLock<Vec<LabeledRow>> = OnceLock::new();
    ROWS.get_or_init(|| generate_rows(TRAINING_ROWS, &DatasetConfig::default(), TRAINING_SEED).unwrap())
}

/// Model trained once per test binary on [`training_rows`].
pub fn model() -> &'static LinearModel {
    static MODEL: OnceLock<LinearModel> = OnceLock::new();
    MODEL.get_or_init(|| train(training_rows(), &TrainConfig::default()).unwrap())
}

pub fn noise(w: usize, h: usize, seed: u64) -> Frame {
    gaussian_background(w, h, NoiseParams::standard(seed)).unwrap()
}

/// A streak calibrated to `psnr` on standard noise.
pub fn calibrated(center: (f64, f64), angle: f64, length: f64, psnr: f64) -> StreakParams {
    let s = StreakParams::new(center, angle, length, 0.0);
    s.with_intensity(calibrate_intensity(psnr, &s, &NoiseParams::standard(0)).unwrap())
}

pub fn scene(size: usize, streaks: &[StreakParams], seed: u64) -> Scene {
    synthesize(size, size, streaks, NoiseParams::standard(seed), IDEAL_MASK_THRESHOLD).unwrap()
}

fn phi(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

/// Closed-form exposure integral of a uniformly moving Gaussian spot.
pub fn streak_value(s: &StreakParams, x: f64, y: f64) -> f64 {
    let sigma = s.psf_sigma;
    let ((ax, ay), _) = s.endpoints();
    let (dx, dy) = s.direction();
    let (px, py) = (x - ax, y - ay);
    let along = px * dx + py * dy;
    let across = -px * dy + py * dx;
    let flux = s.intensity * s.exposure;
    if s.length == 0.0 {
        let r2 = px * px + py * py;
        return flux / (2.0 * std::f64::consts::PI * sigma * sigma) * (-r2 / (2.0 * sigma * sigma)).exp();
    }
    let gauss = (-across * across / (2.0 * sigma * sigma)).exp() / (sigma * (2.0 * std::f64::consts::PI).sqrt());
    flux / s.length * gauss * (phi(along / sigma) - phi((along - s.length) / sigma))
}

/// Integral of the streak over the plane, midpoint rule at `sub` points per pixel.
pub fn quadrature_flux(s: &StreakParams, sub: usize) -> f64 {
    let (x0, x1, y0, y1) = s.footprint();
    let h = 1.0 / sub as f64;
    let mut total = 0.0;
    for j in 0..((y1 - y0 + 1) as usize * sub) {
        let y = y0 as f64 - 0.5 + (j as f64 + 0.5) * h;
        for i in 0..((x1 - x0 + 1) as usize * sub) {
            let x = x0 as f64 - 0.5 + (i as f64 + 0.5) * h;
            total += streak_value(s, x, y);
        }
    }
    total * h * h
}

/// 8-connected regions by breadth-first flood fill, each sorted in raster
/// order, ordered by their first pixel.
pub fn flood_fill(mask: &Mask) -> Vec<Vec<(usize, usize)>> {
    let (w, h) = (mask.width(), mask.height());
    let mut seen = vec![false; w * h];
    let mut out = Vec::new();
    for y in 0..h {
        for x in 0..w {
            if !mask.get(x, y) || seen[y * w + x] {
                continue;
            }
            let mut region = Vec::new();
            let mut queue = VecDeque::from([(x, y)]);
            seen[y * w + x] = true;
            while let Some((cx, cy)) = queue.pop_front() {
                region.push((cx, cy));
                for ny in cy.saturating_sub(1)..=(cy + 1).min(h - 1) {
                    for nx in cx.saturating_sub(1)..=(cx + 1).min(w - 1) {
                        if mask.get(nx, ny) && !seen[ny * w + nx] {
                            seen[ny * w + nx] = true;
                            queue.push_back((nx, ny));
                        }
                    }
                }
            }
            region.sort_by_key(|&(x, y)| (y, x));
            out.push(region);
        }
    }
    out
}

pub fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

pub fn std_dev(v: &[f64]) -> f64 {
    let m = mean(v);
    (v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (v.len() - 1) as f64).sqrt()
}
