//! Analytic streak rendering, PSNR calibration and ground-truth masks.
//!
//! A streak is a point source moving at constant velocity during the exposure.
//! Its image is the time integral of a 2-D Gaussian spot whose centre slides
//! along the segment from one endpoint to the other:
//!
//! ```text
//! I(x, y) = I_c / (2πσ²) ∫₀ᵀ exp(-((x - x_c(t))² + (y - y_c(t))²) / 2σ²) dt
//! ```
//!
//! The integral is evaluated at pixel centres with the composite midpoint rule
//! using `max(32, ⌈8·length⌉)` time steps. Pixel `(i, j)` has its centre at
//! the coordinates `(i, j)`; angles are measured from the +x axis towards +y
//! (image rows grow downward).

use crate::error::{Error, Result};
use crate::image::{BackgroundStats, Frame, Mask, NoiseParams};

/// Point-spread width that gives a trail roughly three pixels wide.
pub const DEFAULT_PSF_SIGMA: f64 = 0.8;

/// Threshold above background that defines the ideal target region.
pub const IDEAL_MASK_THRESHOLD: f64 = 4.0;

/// Footprint half-margin around the segment, in PSF sigmas.
const FOOTPRINT_SIGMAS: f64 = 6.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StreakParams {
    /// Sub-pixel centre of the trail.
    pub center: (f64, f64),
    /// Orientation in degrees, `[0, 180)`.
    pub angle_deg: f64,
    pub length: f64,
    /// Total flux `I_c` (gray · pixel²) per unit exposure.
    pub intensity: f64,
    pub psf_sigma: f64,
    pub exposure: f64,
}

impl StreakParams {
    pub fn new(center: (f64, f64), angle_deg: f64, length: f64, intensity: f64) -> Self {
        Self {
            center,
            angle_deg,
            length,
            intensity,
            psf_sigma: DEFAULT_PSF_SIGMA,
            exposure: 1.0,
        }
    }

    pub fn with_intensity(mut self, intensity: f64) -> Self {
        self.intensity = intensity;
        self
    }

    /// Unit vector along the trail.
    pub fn direction(&self) -> (f64, f64) {
        let a = self.angle_deg.to_radians();
        (a.cos(), a.sin())
    }

    pub fn endpoints(&self) -> ((f64, f64), (f64, f64)) {
        let (dx, dy) = self.direction();
        let h = 0.5 * self.length;
        let (cx, cy) = self.center;
        ((cx - h * dx, cy - h * dy), (cx + h * dx, cy + h * dy))
    }

    pub fn time_steps(&self) -> usize {
        32usize.max((8.0 * self.length).ceil() as usize)
    }

    /// Inclusive pixel box outside which the rendered signal is treated as zero.
    pub fn footprint(&self) -> (i64, i64, i64, i64) {
        let ((ax, ay), (bx, by)) = self.endpoints();
        let r = FOOTPRINT_SIGMAS * self.psf_sigma;
        (
            (ax.min(bx) - r).floor() as i64,
            (ax.max(bx) + r).ceil() as i64,
            (ay.min(by) - r).floor() as i64,
            (ay.max(by) + r).ceil() as i64,
        )
    }

    fn validate(&self) -> Result<()> {
        let ok = self.length >= 0.0
            && self.psf_sigma > 0.0
            && self.intensity >= 0.0
            && self.exposure > 0.0
            && [self.center.0, self.center.1, self.angle_deg, self.length, self.intensity]
                .iter()
                .all(|v| v.is_finite());
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("invalid streak parameters {self:?}")))
        }
    }
}

/// Signal of one streak over its footprint box.
#[derive(Debug, Clone)]
pub struct SignalPatch {
    pub x0: i64,
    pub y0: i64,
    pub width: usize,
    pub height: usize,
    pub values: Vec<f64>,
}

impl SignalPatch {
    pub fn peak(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }

    /// Iterates `(x, y, value)` in raster order.
    pub fn iter(&self) -> impl Iterator<Item = (i64, i64, f64)> + '_ {
        self.values.iter().enumerate().map(move |(i, v)| {
            (self.x0 + (i % self.width) as i64, self.y0 + (i / self.width) as i64, *v)
        })
    }
}

/// Evaluates the exposure integral over the footprint, independent of any frame.
pub fn render_patch(streak: &StreakParams) -> Result<SignalPatch> {
    streak.validate()?;
    let (x0, x1, y0, y1) = streak.footprint();
    let width = (x1 - x0 + 1) as usize;
    let height = (y1 - y0 + 1) as usize;
    let mut values = vec![0.0; width * height];

    let n = streak.time_steps();
    let two_s2 = 2.0 * streak.psf_sigma * streak.psf_sigma;
    let scale = streak.intensity / (std::f64::consts::PI * two_s2) * streak.exposure / n as f64;
    let ((ax, ay), (bx, by)) = streak.endpoints();
    let mut gx = vec![0.0; width];
    let mut gy = vec![0.0; height];
    for k in 0..n {
        let s = (k as f64 + 0.5) / n as f64;
        let px = ax + s * (bx - ax);
        let py = ay + s * (by - ay);
        for (i, g) in gx.iter_mut().enumerate() {
            let d = (x0 + i as i64) as f64 - px;
            *g = (-d * d / two_s2).exp();
        }
        for (j, g) in gy.iter_mut().enumerate() {
            let d = (y0 + j as i64) as f64 - py;
            *g = (-d * d / two_s2).exp();
        }
        for (j, gyj) in gy.iter().enumerate() {
            let row = &mut values[j * width..(j + 1) * width];
            for (v, gxi) in row.iter_mut().zip(&gx) {
                *v += gxi * gyj;
            }
        }
    }
    values.iter_mut().for_each(|v| *v *= scale);
    Ok(SignalPatch { x0, y0, width, height, values })
}

fn check_inside(streak: &StreakParams, width: usize, height: usize) -> Result<()> {
    let (cx, cy) = streak.center;
    let (x0, x1, y0, y1) = streak.footprint();
    let center_inside = cx >= 0.0 && cy >= 0.0 && cx <= (width - 1) as f64 && cy <= (height - 1) as f64;
    if !center_inside || x0 < 0 || y0 < 0 || x1 >= width as i64 || y1 >= height as i64 {
        return Err(Error::StreakClipped { x0, x1, y0, y1, width, height });
    }
    Ok(())
}

/// The added signal alone, on a zero frame of the given size.
pub fn render_signal(width: usize, height: usize, streak: &StreakParams) -> Result<Frame> {
    render_streak(&Frame::filled(width, height, 0.0)?, streak)
}

/// Returns `background` plus the rendered streak.
pub fn render_streak(background: &Frame, streak: &StreakParams) -> Result<Frame> {
    streak.validate()?;
    check_inside(streak, background.width(), background.height())?;
    let patch = render_patch(streak)?;
    let mut out = background.clone();
    let w = out.width();
    let data = out.data_mut();
    for (x, y, v) in patch.iter() {
        data[y as usize * w + x as usize] += v;
    }
    Ok(out)
}

/// Peak signal-to-noise ratio of the region under `mask`.
pub fn psnr_of(frame: &Frame, mask: &Mask, bck: &BackgroundStats) -> Result<f64> {
    if bck.sigma_hat <= 0.0 {
        return Err(Error::ZeroSigma);
    }
    let g_max = frame
        .data()
        .iter()
        .zip(mask.data())
        .filter(|(_, m)| **m)
        .map(|(v, _)| *v)
        .fold(f64::NEG_INFINITY, f64::max);
    if g_max == f64::NEG_INFINITY {
        return Err(Error::EmptyMask);
    }
    Ok((g_max - bck.mu_hat) / bck.sigma_hat)
}

const CALIBRATION_MAX_ITER: usize = 100;

/// Finds `I_c` such that the noiseless streak peaks `target_psnr · σ_N` above
/// the background. The geometry of `streak` is kept, its intensity ignored.
pub fn calibrate_intensity(target_psnr: f64, streak: &StreakParams, noise: &NoiseParams) -> Result<f64> {
    if !(target_psnr >= 0.0 && target_psnr.is_finite()) {
        return Err(Error::InvalidParameter(format!("target PSNR {target_psnr}")));
    }
    let goal = target_psnr * noise.sigma;
    if goal == 0.0 {
        return Ok(0.0);
    }
    // the rendering is linear in I_c, so one unit-flux patch serves every probe
    let unit_peak = render_patch(&streak.with_intensity(1.0))?.peak();
    if unit_peak <= 0.0 {
        return Err(Error::InvalidParameter("streak has no visible signal".into()));
    }
    let peak = |i: f64| i * unit_peak;

    let mut lo = 0.0;
    let mut hi = 1.0;
    let mut iter = 0;
    while peak(hi) < goal {
        lo = hi;
        hi *= 2.0;
        iter += 1;
        if iter >= CALIBRATION_MAX_ITER {
            return Err(Error::NoConvergence(iter));
        }
    }
    while (hi - lo) > 1e-9 * hi {
        let mid = 0.5 * (lo + hi);
        if peak(mid) < goal {
            lo = mid;
        } else {
            hi = mid;
        }
        iter += 1;
        if iter >= CALIBRATION_MAX_ITER {
            return Err(Error::NoConvergence(iter));
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Superlevel set `clean - background_mu >= threshold` of a noiseless frame.
pub fn ideal_mask(clean: &Frame, background_mu: f64, threshold: f64) -> Mask {
    let data = clean.data().iter().map(|v| v - background_mu >= threshold).collect();
    Mask::from_vec(clean.width(), clean.height(), data).expect("same geometry")
}

/// Camera constants that bound how far a trail may curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraGeometry {
    /// Half field of view Φ, degrees.
    pub half_fov_deg: f64,
    pub focal_length: f64,
    /// Largest tolerated arch height, in the focal-length unit.
    pub arch_height_limit: f64,
}

/// Largest rotation angle (degrees) during the exposure for which the trail
/// stays within the arch-height limit of its chord:
/// `α = 2·arccos(1 − cos⁴Φ · h'_max / f)`.
pub fn max_rotation_angle(geom: &CameraGeometry) -> Result<f64> {
    if !(geom.half_fov_deg > 0.0 && geom.half_fov_deg < 90.0) {
        return Err(Error::InvalidParameter(format!("half FoV {} not in (0, 90)", geom.half_fov_deg)));
    }
    if !(geom.focal_length > 0.0) || !(geom.arch_height_limit >= 0.0) {
        return Err(Error::InvalidParameter("focal length must be > 0 and arch height >= 0".into()));
    }
    let c = geom.half_fov_deg.to_radians().cos();
    let arg = 1.0 - c.powi(4) * geom.arch_height_limit / geom.focal_length;
    if !(-1.0..=1.0).contains(&arg) {
        return Err(Error::InvalidParameter(format!("arccos argument {arg} outside [-1, 1]")));
    }
    Ok((2.0 * arg.acos()).to_degrees())
}

/// A synthetic observation together with its noiseless version and ground truth.
#[derive(Debug, Clone)]
pub struct Scene {
    pub noisy: Frame,
    pub clean: Frame,
    pub mask: Mask,
}

/// Renders `streaks` over Gaussian noise. The clean frame is the constant
/// `noise.mu` plus the same signal; the mask thresholds the clean frame.
pub fn synthesize(
    width: usize,
    height: usize,
    streaks: &[StreakParams],
    noise: NoiseParams,
    mask_threshold: f64,
) -> Result<Scene> {
    let mut noisy = crate::image::gaussian_background(width, height, noise)?;
    let mut clean = Frame::filled(width, height, noise.mu)?;
    for s in streaks {
        noisy = render_streak(&noisy, s)?;
        clean = render_streak(&clean, s)?;
    }
    let mask = ideal_mask(&clean, noise.mu, mask_threshold);
    Ok(Scene { noisy, clean, mask })
}
