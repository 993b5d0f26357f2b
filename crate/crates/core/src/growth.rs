//! Oriented growth.
//!
//! A crude component is modelled as five parallel digital lines (layers)
//! around a fitted axis, each with its own Gaussian gray distribution. The
//! direction is chosen by maximising the average joint probability density of
//! the brightest layer over a grid of candidate angles. The brightest layer
//! and its two neighbours then form the seed, which is extended one pixel per
//! layer at a time, first forward and then backward, while the target
//! hypothesis explains the new pixels better than the background does.
//!
//! Layers are dominant-axis digital lines: for a mostly horizontal direction
//! each layer holds one pixel per column, and layer `j` sits `j - 2` rows from
//! the rounded axis (columns for mostly vertical directions). Layer 0 has the
//! smallest minor-axis coordinate.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::detector::Component;
use crate::error::{Error, Result};
use crate::image::{BackgroundStats, Frame};

pub const LAYER_COUNT: usize = 5;
/// Absolute floor on any standard deviation used in a density.
pub const MIN_SIGMA: f64 = 1e-3;
const MIN_AXIS_PIXELS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrowthConfig {
    /// Half-width of the angle search around the initial direction, degrees.
    pub slope_search_halfwidth: f64,
    /// Angle step, degrees.
    pub slope_step: f64,
    /// Per-direction growth budget, pixels.
    pub l_max: usize,
    pub init: AxisInit,
    pub score: AxisScore,
}

/// How the initial direction `k₀` is taken from the crude component.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AxisInit {
    /// Towards the component pixel furthest from the centroid.
    Furthest,
    /// Major principal axis of the background-subtracted gray moments.
    Principal,
}

/// Criterion maximised over candidate directions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AxisScore {
    /// log AJPD of the central layer under its own Gaussian.
    Ajpd,
    /// Mean log-likelihood ratio of the central layer, own Gaussian against
    /// the background.
    Contrast,
}

impl Default for GrowthConfig {
    fn default() -> Self {
        Self {
            slope_search_halfwidth: 15.0,
            slope_step: 0.5,
            l_max: 10,
            init: AxisInit::Principal,
            score: AxisScore::Contrast,
        }
    }
}

impl GrowthConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.slope_search_halfwidth > 0.0 && self.slope_step > 0.0) || self.l_max == 0 {
            return Err(Error::InvalidParameter(format!("bad growth config {self:?}")));
        }
        Ok(())
    }

    fn candidate_offsets(&self) -> impl Iterator<Item = f64> + '_ {
        let n = (self.slope_search_halfwidth / self.slope_step + 1e-9).floor() as i64;
        (-n..=n).map(move |i| i as f64 * self.slope_step)
    }
}

/// A digital line family anchored at `origin` with unit `direction`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineGeometry {
    pub origin: (f64, f64),
    pub direction: (f64, f64),
}

impl LineGeometry {
    pub fn new(origin: (f64, f64), direction: (f64, f64)) -> Self {
        Self { origin, direction }
    }

    pub fn x_major(&self) -> bool {
        self.direction.0.abs() >= self.direction.1.abs()
    }

    /// `(major, minor)` coordinates of a pixel.
    #[inline]
    pub fn split(&self, x: i64, y: i64) -> (i64, i64) {
        if self.x_major() {
            (x, y)
        } else {
            (y, x)
        }
    }

    /// Rounded minor coordinate of the axis at major coordinate `u`.
    #[inline]
    pub fn axis_minor(&self, u: i64) -> i64 {
        let (dx, dy) = self.direction;
        let (ox, oy) = self.origin;
        let v = if self.x_major() {
            oy + (u as f64 - ox) * dy / dx
        } else {
            ox + (u as f64 - oy) * dx / dy
        };
        (v + 0.5).floor() as i64
    }

    /// Signed minor-axis offset of a pixel from the rounded axis.
    #[inline]
    pub fn offset_of(&self, x: i64, y: i64) -> i64 {
        let (u, v) = self.split(x, y);
        v - self.axis_minor(u)
    }

    /// Pixel at major coordinate `u` on the line `offset` steps from the axis.
    #[inline]
    pub fn pixel(&self, u: i64, offset: i64) -> (i64, i64) {
        let v = self.axis_minor(u) + offset;
        if self.x_major() {
            (u, v)
        } else {
            (v, u)
        }
    }

    /// +1 when the direction points toward increasing major coordinate.
    pub fn forward_sign(&self) -> i64 {
        let major = if self.x_major() { self.direction.0 } else { self.direction.1 };
        if major >= 0.0 {
            1
        } else {
            -1
        }
    }
}

fn in_frame(frame: &Frame, (x, y): (i64, i64)) -> Option<(usize, usize)> {
    frame.contains(x, y).then_some((x as usize, y as usize))
}

/// Rasterizes the five layers over major coordinates `extent.0..=extent.1`.
pub fn rasterize_layers(
    frame: &Frame,
    geometry: &LineGeometry,
    extent: (i64, i64),
) -> Result<[Vec<(usize, usize)>; LAYER_COUNT]> {
    let mut layers: [Vec<(usize, usize)>; LAYER_COUNT] = Default::default();
    for (j, layer) in layers.iter_mut().enumerate() {
        for u in extent.0..=extent.1 {
            let p = geometry.pixel(u, j as i64 - 2);
            layer.push(in_frame(frame, p).ok_or(Error::ExtentOutOfFrame)?);
        }
    }
    Ok(layers)
}

#[inline]
pub fn log_normal_pdf(g: f64, mu: f64, sigma: f64) -> f64 {
    let z = (g - mu) / sigma;
    -0.5 * z * z - (sigma * (2.0 * PI).sqrt()).ln()
}

/// Logarithm of the geometric mean of Gaussian densities of `grays`.
pub fn log_ajpd(grays: &[f64], mu: f64, sigma: f64) -> Result<f64> {
    if grays.is_empty() {
        return Err(Error::EmptyMask);
    }
    if !(sigma > 0.0) {
        return Err(Error::ZeroSigma);
    }
    let q: f64 = grays.iter().map(|g| (g - mu) * (g - mu)).sum();
    Ok(-q / (2.0 * sigma * sigma * grays.len() as f64) - (sigma * (2.0 * PI).sqrt()).ln())
}

/// Background-subtracted gray-weighted centroid. Weights are `max(g - mu, 0)`;
/// if they all vanish the plain mean of the coordinates is returned.
pub fn weighted_centroid(frame: &Frame, pixels: &[(usize, usize)], background_mu: f64) -> Option<(f64, f64)> {
    if pixels.is_empty() {
        return None;
    }
    let (mut sw, mut sx, mut sy) = (0.0, 0.0, 0.0);
    for &(x, y) in pixels {
        let w = (frame.get(x, y) - background_mu).max(0.0);
        sw += w;
        sx += w * x as f64;
        sy += w * y as f64;
    }
    if sw > 0.0 {
        return Some((sx / sw, sy / sw));
    }
    let n = pixels.len() as f64;
    let mx = pixels.iter().map(|p| p.0 as f64).sum::<f64>() / n;
    let my = pixels.iter().map(|p| p.1 as f64).sum::<f64>() / n;
    Some((mx, my))
}

/// Centroid `c₀` and the unit vector from `c₀` to the furthest component pixel
/// (first in raster order on ties).
pub fn initial_geometry(
    component: &Component,
    frame: &Frame,
    background: &BackgroundStats,
) -> Result<((f64, f64), (f64, f64))> {
    if component.len() < 2 {
        return Err(Error::DegenerateComponent(format!("{} pixel(s)", component.len())));
    }
    let c0 = weighted_centroid(frame, component.pixels(), background.mu_hat).ok_or(Error::EmptyMask)?;
    let mut best = (f64::NEG_INFINITY, (0.0, 0.0));
    for &(x, y) in component.pixels() {
        let d = (x as f64 - c0.0, y as f64 - c0.1);
        let r2 = d.0 * d.0 + d.1 * d.1;
        if r2 > best.0 {
            best = (r2, d);
        }
    }
    if best.0 <= 0.0 {
        return Err(Error::DegenerateComponent("all pixels at the centroid".into()));
    }
    let r = best.0.sqrt();
    Ok((c0, (best.1 .0 / r, best.1 .1 / r)))
}

/// Centroid `c₀` and the major principal axis of the component, with pixels
/// weighted by their gray value above the background mean.
pub fn principal_geometry(
    component: &Component,
    frame: &Frame,
    background: &BackgroundStats,
) -> Result<((f64, f64), (f64, f64))> {
    if component.len() < 2 {
        return Err(Error::DegenerateComponent(format!("{} pixel(s)", component.len())));
    }
    let c0 = weighted_centroid(frame, component.pixels(), background.mu_hat).ok_or(Error::EmptyMask)?;
    let moments = |weighted: bool| {
        let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
        for &(x, y) in component.pixels() {
            let w = if weighted { (frame.get(x, y) - background.mu_hat).max(0.0) } else { 1.0 };
            let (dx, dy) = (x as f64 - c0.0, y as f64 - c0.1);
            sxx += w * dx * dx;
            sxy += w * dx * dy;
            syy += w * dy * dy;
        }
        (sxx, sxy, syy)
    };
    let (mut sxx, mut sxy, mut syy) = moments(true);
    if sxx + syy <= 0.0 {
        (sxx, sxy, syy) = moments(false);
    }
    if sxx + syy <= 0.0 {
        return Err(Error::DegenerateComponent("all pixels at the centroid".into()));
    }
    let theta = 0.5 * (2.0 * sxy).atan2(sxx - syy);
    Ok((c0, (theta.cos(), theta.sin())))
}

/// Five-layer Gaussian model around a fitted axis.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerModel {
    pub geometry: LineGeometry,
    /// Major-axis range of the component used for fitting.
    pub extent: (i64, i64),
    pub means: [f64; LAYER_COUNT],
    pub stds: [f64; LAYER_COUNT],
    /// Component pixels that fell in each layer.
    pub counts: [usize; LAYER_COUNT],
    /// Zero-based index of the brightest layer.
    pub central: usize,
    pub background: BackgroundStats,
    /// log AJPD of the central layer.
    pub score: f64,
    /// Mean log-likelihood ratio of the central layer against the background.
    pub contrast: f64,
}

impl LayerModel {
    pub fn direction(&self) -> (f64, f64) {
        self.geometry.direction
    }

    /// Mean and std for a layer offset from the axis, where offsets outside
    /// the five modelled layers use the background.
    pub fn stats_at(&self, offset: i64) -> (f64, f64) {
        let j = offset + 2;
        if (0..LAYER_COUNT as i64).contains(&j) {
            (self.means[j as usize], self.stds[j as usize])
        } else {
            (self.background.mu_hat, background_sigma(&self.background))
        }
    }

    /// Axis offsets of the three seed layers.
    pub fn seed_offsets(&self) -> [i64; 3] {
        let m = self.central as i64 - 2;
        [m - 1, m, m + 1]
    }
}

fn background_sigma(bg: &BackgroundStats) -> f64 {
    bg.sigma_hat.max(MIN_SIGMA)
}

fn sample_stats(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Fits the five-layer model for one fixed direction. Returns `None` when
/// the extent leaves the frame or the central layer has fewer than three
/// component pixels.
pub fn fit_layers(
    frame: &Frame,
    component: &Component,
    geometry: LineGeometry,
    background: &BackgroundStats,
) -> Option<LayerModel> {
    let mut members: [Vec<f64>; LAYER_COUNT] = Default::default();
    let (mut lo, mut hi) = (i64::MAX, i64::MIN);
    for &(x, y) in component.pixels() {
        let (u, _) = geometry.split(x as i64, y as i64);
        lo = lo.min(u);
        hi = hi.max(u);
        let j = geometry.offset_of(x as i64, y as i64) + 2;
        if (0..LAYER_COUNT as i64).contains(&j) {
            members[j as usize].push(frame.get(x, y));
        }
    }
    if lo > hi {
        return None;
    }
    let sigma_b = background_sigma(background);
    let floor = (background.sigma_hat / 2.0).max(MIN_SIGMA);
    let mut means = [background.mu_hat; LAYER_COUNT];
    let mut stds = [sigma_b; LAYER_COUNT];
    let mut counts = [0; LAYER_COUNT];
    for j in 0..LAYER_COUNT {
        counts[j] = members[j].len();
        if counts[j] >= 2 {
            let (m, s) = sample_stats(&members[j]);
            means[j] = m;
            stds[j] = s.max(floor);
        }
    }
    let mut central = 0;
    for j in 1..LAYER_COUNT {
        if means[j] > means[central] {
            central = j;
        }
    }
    if counts[central] < MIN_AXIS_PIXELS {
        return None;
    }
    let mut axis = Vec::with_capacity((hi - lo + 1) as usize);
    for u in lo..=hi {
        let (x, y) = in_frame(frame, geometry.pixel(u, central as i64 - 2))?;
        axis.push(frame.get(x, y));
    }
    let score = log_ajpd(&axis, means[central], stds[central]).ok()?;
    let sigma_b = background_sigma(background);
    let contrast = score
        - axis.iter().map(|&g| log_normal_pdf(g, background.mu_hat, sigma_b)).sum::<f64>() / axis.len() as f64;
    Some(LayerModel {
        geometry,
        extent: (lo, hi),
        means,
        stds,
        counts,
        central,
        background: *background,
        score,
        contrast,
    })
}

/// Angles (degrees) searched around `theta0`, in ascending order.
pub fn candidate_angles(theta0_deg: f64, config: &GrowthConfig) -> Vec<f64> {
    config.candidate_offsets().map(|d| theta0_deg + d).collect()
}

pub fn direction_from_angle(angle_deg: f64) -> (f64, f64) {
    let t = angle_deg.to_radians();
    (t.cos(), t.sin())
}

/// Best-scoring candidate direction; ties go to the candidate nearest `k0`.
pub fn optimal_direction(
    frame: &Frame,
    component: &Component,
    c0: (f64, f64),
    k0: (f64, f64),
    background: &BackgroundStats,
    config: &GrowthConfig,
) -> Result<LayerModel> {
    config.validate()?;
    let theta0 = k0.1.atan2(k0.0).to_degrees();
    let mut best: Option<(f64, LayerModel)> = None;
    for angle in candidate_angles(theta0, config) {
        let geometry = LineGeometry::new(c0, direction_from_angle(angle));
        let Some(model) = fit_layers(frame, component, geometry, background) else {
            continue;
        };
        let dist = (angle - theta0).abs();
        let key = |m: &LayerModel| match config.score {
            AxisScore::Ajpd => m.score,
            AxisScore::Contrast => m.contrast,
        };
        let better = match &best {
            None => true,
            Some((d, b)) => key(&model) > key(b) || (key(&model) == key(b) && dist < *d),
        };
        if better {
            best = Some((dist, model));
        }
    }
    best.map(|(_, m)| m).ok_or(Error::NoAxis)
}

/// Sum of per-pixel log densities of the seed pixels under their layer model.
pub fn seed_jpd(frame: &Frame, seed_layers: &[Vec<(usize, usize)>; 3], model: &LayerModel) -> f64 {
    let mut total = 0.0;
    for (layer, offset) in seed_layers.iter().zip(model.seed_offsets()) {
        let (mu, sigma) = model.stats_at(offset);
        for &(x, y) in layer {
            total += log_normal_pdf(frame.get(x, y), mu, sigma);
        }
    }
    total
}

/// The three seed layers over the major-axis range of the component pixels
/// that fall in them.
pub fn seed_layers(
    frame: &Frame,
    component: &Component,
    model: &LayerModel,
) -> Result<((i64, i64), [Vec<(usize, usize)>; 3])> {
    let g = &model.geometry;
    let offsets = model.seed_offsets();
    let (mut lo, mut hi) = (i64::MAX, i64::MIN);
    for &(x, y) in component.pixels() {
        if offsets.contains(&g.offset_of(x as i64, y as i64)) {
            let (u, _) = g.split(x as i64, y as i64);
            lo = lo.min(u);
            hi = hi.max(u);
        }
    }
    if lo > hi {
        return Err(Error::NoAxis);
    }
    let mut layers: [Vec<(usize, usize)>; 3] = Default::default();
    for (layer, &off) in layers.iter_mut().zip(&offsets) {
        for u in lo..=hi {
            layer.push(in_frame(frame, g.pixel(u, off)).ok_or(Error::ExtentOutOfFrame)?);
        }
    }
    Ok(((lo, hi), layers))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    Background,
    LengthLimit,
    FrameEdge,
}

/// Outcome of growing one direction.
#[derive(Debug, Clone, PartialEq)]
pub struct GrowthRun {
    pub steps: usize,
    pub pixels: Vec<(usize, usize)>,
    pub stop: StopReason,
}

/// Extends the seed from major coordinate `start` in steps of `step` (±1).
pub fn grow_direction(frame: &Frame, model: &LayerModel, start: i64, step: i64, l_max: usize) -> GrowthRun {
    let g = &model.geometry;
    let offsets = model.seed_offsets();
    let stats = offsets.map(|o| model.stats_at(o));
    let (mu_b, sigma_b) = (model.background.mu_hat, background_sigma(&model.background));
    let mut run = GrowthRun { steps: 0, pixels: Vec::new(), stop: StopReason::Background };
    let mut u = start;
    loop {
        if run.steps >= l_max {
            run.stop = StopReason::LengthLimit;
            return run;
        }
        let mut step_pixels = [(0, 0); 3];
        for (p, &off) in step_pixels.iter_mut().zip(&offsets) {
            match in_frame(frame, g.pixel(u, off)) {
                Some(q) => *p = q,
                None => {
                    run.stop = StopReason::FrameEdge;
                    return run;
                }
            }
        }
        let (mut lt, mut lb) = (0.0, 0.0);
        for (&(x, y), &(mu, sigma)) in step_pixels.iter().zip(&stats) {
            let a = frame.get(x, y);
            lt += log_normal_pdf(a, mu, sigma);
            lb += log_normal_pdf(a, mu_b, sigma_b);
        }
        if !(lt > lb) {
            run.stop = StopReason::Background;
            return run;
        }
        run.pixels.extend_from_slice(&step_pixels);
        run.steps += 1;
        u += step;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum RefineStatus {
    Grown,
    /// The component could not be modelled and is returned as is.
    Ungrown(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectionResult {
    /// Final pixel set (seed plus grown pixels).
    pub component: Component,
    pub centroid: (f64, f64),
    pub direction: (f64, f64),
    /// Three-layer band the growth started from.
    pub seed: Component,
    /// Component produced by crude classification.
    pub crude: Component,
    pub grew_forward: usize,
    pub grew_backward: usize,
    pub stop_forward: Option<StopReason>,
    pub stop_backward: Option<StopReason>,
    pub seed_log_jpd: f64,
    pub model: Option<LayerModel>,
    pub status: RefineStatus,
}

impl DetectionResult {
    /// Direction angle folded into `[0, 180)` degrees.
    pub fn angle_deg(&self) -> f64 {
        let a = self.direction.1.atan2(self.direction.0).to_degrees().rem_euclid(180.0);
        if a >= 180.0 {
            0.0
        } else {
            a
        }
    }

    fn ungrown(frame: &Frame, crude: &Component, background: &BackgroundStats, reason: String) -> Self {
        let centroid = weighted_centroid(frame, crude.pixels(), background.mu_hat).unwrap_or((f64::NAN, f64::NAN));
        Self {
            component: crude.clone(),
            centroid,
            direction: (1.0, 0.0),
            seed: crude.clone(),
            crude: crude.clone(),
            grew_forward: 0,
            grew_backward: 0,
            stop_forward: None,
            stop_backward: None,
            seed_log_jpd: f64::NAN,
            model: None,
            status: RefineStatus::Ungrown(reason),
        }
    }
}

/// Grows a fitted model: forward first, then backward with a fresh budget.
pub fn grow(
    frame: &Frame,
    crude: &Component,
    model: LayerModel,
    config: &GrowthConfig,
) -> Result<DetectionResult> {
    let ((lo, hi), layers) = seed_layers(frame, crude, &model)?;
    let s = model.geometry.forward_sign();
    let (fwd_start, bwd_start) = if s > 0 { (hi + 1, lo - 1) } else { (lo - 1, hi + 1) };
    let fwd = grow_direction(frame, &model, fwd_start, s, config.l_max);
    let bwd = grow_direction(frame, &model, bwd_start, -s, config.l_max);

    let seed = Component::from_pixels(layers.iter().flatten().copied().collect());
    let mut all: Vec<_> = seed.pixels().to_vec();
    all.extend_from_slice(&fwd.pixels);
    all.extend_from_slice(&bwd.pixels);
    let component = Component::from_pixels(all);
    let centroid = weighted_centroid(frame, component.pixels(), model.background.mu_hat).ok_or(Error::EmptyMask)?;
    Ok(DetectionResult {
        centroid,
        direction: model.direction(),
        seed_log_jpd: seed_jpd(frame, &layers, &model),
        seed,
        component,
        crude: crude.clone(),
        grew_forward: fwd.steps,
        grew_backward: bwd.steps,
        stop_forward: Some(fwd.stop),
        stop_backward: Some(bwd.stop),
        model: Some(model),
        status: RefineStatus::Grown,
    })
}

fn refine_one(
    frame: &Frame,
    crude: &Component,
    background: &BackgroundStats,
    config: &GrowthConfig,
) -> Result<DetectionResult> {
    let (c0, k0) = match config.init {
        AxisInit::Furthest => initial_geometry(crude, frame, background)?,
        AxisInit::Principal => principal_geometry(crude, frame, background)?,
    };
    let model = optimal_direction(frame, crude, c0, k0, background, config)?;
    grow(frame, crude, model, config)
}

/// Runs initial geometry, direction fitting and growth on every component.
/// Components that cannot be modelled come back ungrown with a reason.
pub fn refine(
    frame: &Frame,
    crude: &[Component],
    background: &BackgroundStats,
    config: &GrowthConfig,
) -> Vec<DetectionResult> {
    crude
        .par_iter()
        .map(|c| {
            refine_one(frame, c, background, config)
                .unwrap_or_else(|e| DetectionResult::ungrown(frame, c, background, e.to_string()))
        })
        .collect()
}

/// `id,centroid_x,centroid_y,angle_deg,size,grew_fwd,grew_bwd,seed_log_jpd`.
pub fn results_csv(results: &[DetectionResult], comment: Option<&str>) -> String {
    use std::fmt::Write as _;
    let mut s = String::new();
    if let Some(c) = comment {
        writeln!(s, "# {c}").unwrap();
    }
    s.push_str("id,centroid_x,centroid_y,angle_deg,size,grew_fwd,grew_bwd,seed_log_jpd\n");
    for (i, r) in results.iter().enumerate() {
        writeln!(
            s,
            "{i},{:.4},{:.4},{:.3},{},{},{},{:.6}",
            r.centroid.0,
            r.centroid.1,
            r.angle_deg(),
            r.component.len(),
            r.grew_forward,
            r.grew_backward,
            r.seed_log_jpd
        )
        .unwrap();
    }
    s
}
