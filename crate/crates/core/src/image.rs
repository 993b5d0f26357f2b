//! Grayscale frames, binary masks, noise synthesis and background estimation.
//!
//! Gray values are stored as `f64` in row-major order. Quantization to 8 bit
//! only happens in [`crate::pgm`].

use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::rng;

/// A row-major grayscale frame.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl Frame {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidDimensions { width, height });
        }
        if data.len() != width * height {
            return Err(Error::BufferSize { width, height, len: data.len() });
        }
        if let Some(v) = data.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(Error::InvalidParameter(format!("gray value {v} is negative or not finite")));
        }
        Ok(Self { width, height, data })
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self::new(width, height, data)
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    /// Gray value at signed coordinates, `None` outside the frame.
    #[inline]
    pub fn get_signed(&self, x: i64, y: i64) -> Option<f64> {
        if x < 0 || y < 0 || x as usize >= self.width || y as usize >= self.height {
            None
        } else {
            Some(self.get(x as usize, y as usize))
        }
    }

    #[inline]
    pub fn contains(&self, x: i64, y: i64) -> bool {
        x >= 0 && y >= 0 && (x as usize) < self.width && (y as usize) < self.height
    }

    /// Adds a constant to every pixel.
    pub fn offset(&self, c: f64) -> Result<Self> {
        Self::new(self.width, self.height, self.data.iter().map(|v| v + c).collect())
    }

    pub(crate) fn from_raw_unchecked(width: usize, height: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), width * height);
        Self { width, height, data }
    }

    pub(crate) fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }
}

/// A row-major binary map of the same geometry as a frame.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mask {
    width: usize,
    height: usize,
    data: Vec<bool>,
}

impl Mask {
    pub fn new(width: usize, height: usize) -> Self {
        Self { width, height, data: vec![false; width * height] }
    }

    pub fn from_vec(width: usize, height: usize, data: Vec<bool>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::BufferSize { width, height, len: data.len() });
        }
        Ok(Self { width, height, data })
    }

    pub fn from_pixels(width: usize, height: usize, pixels: &[(usize, usize)]) -> Self {
        let mut m = Self::new(width, height);
        for &(x, y) in pixels {
            m.set(x, y, true);
        }
        m
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn data(&self) -> &[bool] {
        &self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: bool) {
        self.data[y * self.width + x] = v;
    }

    pub fn count(&self) -> usize {
        self.data.iter().filter(|v| **v).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.data.iter().any(|v| *v)
    }

    /// Set pixels in raster order.
    pub fn pixels(&self) -> Vec<(usize, usize)> {
        self.data
            .iter()
            .enumerate()
            .filter(|(_, v)| **v)
            .map(|(i, _)| (i % self.width, i / self.width))
            .collect()
    }
}

/// Parameters of additive Gaussian background noise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseParams {
    pub mu: f64,
    pub sigma: f64,
    pub seed: u64,
}

impl NoiseParams {
    /// Background used throughout the training recipe: mean 30, variance 64.
    pub fn standard(seed: u64) -> Self {
        Self { mu: 30.0, sigma: 8.0, seed }
    }

    fn validate(&self) -> Result<()> {
        if !(self.mu >= 0.0 && self.sigma >= 0.0 && self.mu.is_finite() && self.sigma.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "noise mu={} sigma={} must be finite and non-negative",
                self.mu, self.sigma
            )));
        }
        Ok(())
    }
}

/// Estimated background level and spread.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BackgroundStats {
    pub mu_hat: f64,
    pub sigma_hat: f64,
}

/// Independent `N(mu, sigma²)` samples clamped at 0, drawn in raster order from
/// a ChaCha8 stream seeded with `noise.seed`.
pub fn gaussian_background(width: usize, height: usize, noise: NoiseParams) -> Result<Frame> {
    if width == 0 || height == 0 {
        return Err(Error::InvalidDimensions { width, height });
    }
    noise.validate()?;
    let normal = Normal::new(noise.mu, noise.sigma)
        .map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let mut rng = rng::seeded(noise.seed);
    let data = (0..width * height)
        .map(|_| normal.sample(&mut rng).max(0.0))
        .collect();
    Ok(Frame::from_raw_unchecked(width, height, data))
}

const CLIP_SIGMAS: f64 = 3.0;
const CLIP_ITERATIONS: usize = 3;

/// Sigma-clipped mean and standard deviation (3σ, 3 iterations).
pub fn background_stats(frame: &Frame) -> BackgroundStats {
    clipped_stats(frame.data(), CLIP_SIGMAS, CLIP_ITERATIONS)
}

/// Mean and population standard deviation of `values`, re-estimated
/// `iterations` times over the samples within `k` sigmas of the last estimate.
pub fn clipped_stats(values: &[f64], k: f64, iterations: usize) -> BackgroundStats {
    let (mut mu, mut sigma) = moments(values.iter().copied());
    for _ in 0..iterations {
        let (lo, hi) = (mu - k * sigma, mu + k * sigma);
        let (m, s) = moments(values.iter().copied().filter(|v| *v >= lo && *v <= hi));
        if m.is_nan() {
            break;
        }
        mu = m;
        sigma = s;
    }
    BackgroundStats { mu_hat: mu, sigma_hat: sigma }
}

pub(crate) fn moments(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let mut n = 0usize;
    let mut sum = 0.0;
    let mut sq = 0.0;
    let buf: Vec<f64> = values.collect();
    for v in &buf {
        n += 1;
        sum += v;
    }
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = sum / n as f64;
    for v in &buf {
        sq += (v - mean) * (v - mean);
    }
    (mean, (sq / n as f64).sqrt())
}
