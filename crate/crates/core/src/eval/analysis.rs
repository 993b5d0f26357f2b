//! Capability analysis of the 5×5 sub-region features under independent
//! Gaussian pixels.
//!
//! A sub-region holds `n0` pixels: `|BG|` background pixels `N(μ_N, σ_N²)`
//! and, for a target sub-region, `occupancy[i]` pixels from streak layer `i`
//! with `N(μ_i, σ_i²)`. The mean gray of a sub-region is then Gaussian, the
//! maximum gray has CDF `∏ Φ((g - μ_j)/σ_j)`, and the raw-mean part of the
//! classifier score (`A₁`) is Gaussian. The maximum-gray part (`A₂`) has no
//! closed form and is sampled.

use rand::Rng;
use rand_distr::{Distribution, Normal as NormalSampler};
use statrs::distribution::{Continuous, ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::features::FEATURE_DIM;
use crate::growth::LineGeometry;
use crate::rng;

#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisParams {
    pub n0: usize,
    pub noise_mu: f64,
    pub noise_sigma: f64,
    pub layer_means: [f64; 3],
    pub layer_stds: [f64; 3],
    /// Pixels of each streak layer inside a target sub-region.
    pub occupancy: [usize; 3],
    /// Number of background sub-regions among the 25 tile means.
    pub k: usize,
    pub weights: [f64; FEATURE_DIM],
    pub bias: f64,
}

impl Default for AnalysisParams {
    /// A 30° streak at PSNR 2 on `N(30, 8²)`, with unit weights.
    fn default() -> Self {
        let peak = 16.0;
        // side layers sit one pixel off the ridge of a σ = 0.8 profile
        let side = peak * (-1.0f64 / (2.0 * 0.64)).exp();
        Self {
            n0: 25,
            noise_mu: 30.0,
            noise_sigma: 8.0,
            layer_means: [30.0 + side, 30.0 + peak, 30.0 + side],
            layer_stds: [8.0; 3],
            occupancy: layer_occupancy(30.0),
            k: 20,
            weights: [1.0; FEATURE_DIM],
            bias: 0.0,
        }
    }
}

impl AnalysisParams {
    pub fn background_count(&self) -> usize {
        self.n0 - self.occupancy.iter().sum::<usize>()
    }

    pub fn validate(&self) -> Result<()> {
        let occupied: usize = self.occupancy.iter().sum();
        let finite = [self.noise_mu, self.noise_sigma, self.bias]
            .iter()
            .chain(&self.layer_means)
            .chain(&self.layer_stds)
            .chain(&self.weights)
            .all(|v| v.is_finite());
        if self.n0 == 0 || occupied > self.n0 || self.k > 25 || !finite {
            return Err(Error::InvalidParameter(format!("inconsistent analysis parameters {self:?}")));
        }
        if self.noise_sigma <= 0.0 || self.layer_stds.iter().any(|s| *s <= 0.0) {
            return Err(Error::ZeroSigma);
        }
        Ok(())
    }

    /// `(μ, σ, count)` groups of the pixels in a target sub-region.
    fn pixel_groups(&self) -> Vec<(f64, f64, usize)> {
        let mut g = vec![(self.noise_mu, self.noise_sigma, self.background_count())];
        for i in 0..3 {
            g.push((self.layer_means[i], self.layer_stds[i], self.occupancy[i]));
        }
        g.retain(|x| x.2 > 0);
        g
    }
}

/// Pixels of a 3-pixel-wide digital line at `angle_deg` through the centre of
/// a 5×5 sub-region, per layer.
pub fn layer_occupancy(angle_deg: f64) -> [usize; 3] {
    let t = angle_deg.to_radians();
    let g = LineGeometry::new((2.0, 2.0), (t.cos(), t.sin()));
    let mut occ = [0; 3];
    for y in 0..5i64 {
        for x in 0..5i64 {
            let o = g.offset_of(x, y);
            if (-1..=1).contains(&o) {
                occ[(o + 1) as usize] += 1;
            }
        }
    }
    occ
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubregionDistributions {
    pub background: (f64, f64),
    pub target: (f64, f64),
}

pub fn subregion_distributions(p: &AnalysisParams) -> Result<SubregionDistributions> {
    p.validate()?;
    let n0 = p.n0 as f64;
    let bg = p.background_count() as f64;
    let mut mu = bg * p.noise_mu;
    let mut var = bg * p.noise_sigma * p.noise_sigma;
    for i in 0..3 {
        let c = p.occupancy[i] as f64;
        mu += c * p.layer_means[i];
        var += c * p.layer_stds[i] * p.layer_stds[i];
    }
    Ok(SubregionDistributions {
        background: (p.noise_mu, p.noise_sigma / n0.sqrt()),
        target: (mu / n0, var.sqrt() / n0),
    })
}

fn normal(mu: f64, sigma: f64) -> Result<Normal> {
    Normal::new(mu, sigma).map_err(|e| Error::InvalidParameter(e.to_string()))
}

/// Analytic CDF and PDF of the maximum gray of a target sub-region.
#[derive(Debug, Clone)]
pub struct MaxGrayDistribution {
    groups: Vec<(Normal, usize)>,
}

impl MaxGrayDistribution {
    pub fn new(p: &AnalysisParams) -> Result<Self> {
        p.validate()?;
        let groups = p
            .pixel_groups()
            .into_iter()
            .map(|(m, s, c)| Ok((normal(m, s)?, c)))
            .collect::<Result<_>>()?;
        Ok(Self { groups })
    }

    pub fn cdf(&self, g: f64) -> f64 {
        self.groups.iter().map(|(d, c)| d.cdf(g).powi(*c as i32)).product()
    }

    pub fn pdf(&self, g: f64) -> f64 {
        let cdfs: Vec<f64> = self.groups.iter().map(|(d, _)| d.cdf(g)).collect();
        let mut total = 0.0;
        for (i, (d, c)) in self.groups.iter().enumerate() {
            let mut term = *c as f64 * d.pdf(g) * cdfs[i].powi(*c as i32 - 1);
            for (j, (_, cj)) in self.groups.iter().enumerate() {
                if j != i {
                    term *= cdfs[j].powi(*cj as i32);
                }
            }
            total += term;
        }
        total
    }
}

/// Draws the maximum over all pixels of a simulated target sub-region.
pub fn max_gray_samples(p: &AnalysisParams, n: usize, seed: u64) -> Result<Vec<f64>> {
    p.validate()?;
    let groups = p.pixel_groups();
    let mut samplers = Vec::new();
    for (m, s, c) in groups {
        samplers.push((NormalSampler::new(m, s).map_err(|e| Error::InvalidParameter(e.to_string()))?, c));
    }
    let mut rng = rng::seeded(seed);
    Ok((0..n)
        .map(|_| {
            let mut best = f64::NEG_INFINITY;
            for (d, c) in &samplers {
                for _ in 0..*c {
                    best = best.max(d.sample(&mut rng));
                }
            }
            best
        })
        .collect())
}

/// Kolmogorov–Smirnov distance between `samples` and a continuous CDF.
pub fn ks_statistic(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut s = samples.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len() as f64;
    let mut d: f64 = 0.0;
    for (i, x) in s.iter().enumerate() {
        let f = cdf(*x);
        d = d.max((i as f64 + 1.0) / n - f).max(f - i as f64 / n);
    }
    d
}

/// Mean and standard deviation of `A₁`: tiles `1..=k` are background
/// sub-regions, the rest are target sub-regions.
pub fn weighted_sum_distribution(p: &AnalysisParams) -> Result<(f64, f64)> {
    let d = subregion_distributions(p)?;
    let (mut mu, mut var) = (0.0, 0.0);
    for (i, w) in p.weights.iter().take(25).enumerate() {
        let (m, s) = if i < p.k { d.background } else { d.target };
        mu += w * m;
        var += w * w * s * s;
    }
    Ok((mu, var.sqrt()))
}

/// Monte-Carlo draws of `A₁` built from simulated sub-region means.
pub fn a1_samples(p: &AnalysisParams, n: usize, seed: u64) -> Result<Vec<f64>> {
    let d = subregion_distributions(p)?;
    let bg = NormalSampler::new(d.background.0, d.background.1).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let mut rng = rng::seeded(seed);
    let groups = p.pixel_groups();
    let target: Vec<_> = groups
        .iter()
        .map(|&(m, s, c)| (NormalSampler::new(m, s).unwrap(), c))
        .collect();
    Ok((0..n)
        .map(|_| {
            let mut a = 0.0;
            for (i, w) in p.weights.iter().take(25).enumerate() {
                let mean = if i < p.k { bg.sample(&mut rng) } else { sample_target_mean(&target, p.n0, &mut rng) };
                a += w * mean;
            }
            a
        })
        .collect())
}

fn sample_target_mean<R: Rng>(groups: &[(NormalSampler<f64>, usize)], n0: usize, rng: &mut R) -> f64 {
    let mut s = 0.0;
    for (d, c) in groups {
        for _ in 0..*c {
            s += d.sample(rng);
        }
    }
    s / n0 as f64
}

/// Monte-Carlo draws of `A₂ = ω₂₆ x₂₆`, where `x₂₆` is the maximum of the
/// centre target sub-region minus the smallest of the 25 sub-region means.
pub fn a2_samples(p: &AnalysisParams, n: usize, seed: u64) -> Result<Vec<f64>> {
    let d = subregion_distributions(p)?;
    let bg = NormalSampler::new(d.background.0, d.background.1).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let groups: Vec<_> = p
        .pixel_groups()
        .iter()
        .map(|&(m, s, c)| (NormalSampler::new(m, s).unwrap(), c))
        .collect();
    let mut rng = rng::seeded(seed);
    let w26 = p.weights[FEATURE_DIM - 1];
    Ok((0..n)
        .map(|_| {
            let mut centre_max = f64::NEG_INFINITY;
            let mut centre_sum = 0.0;
            for (dist, c) in &groups {
                for _ in 0..*c {
                    let g = dist.sample(&mut rng);
                    centre_sum += g;
                    centre_max = centre_max.max(g);
                }
            }
            let mut m_bck = centre_sum / p.n0 as f64;
            for i in 0..24 {
                let m = if i < p.k { bg.sample(&mut rng) } else { sample_target_mean(&groups, p.n0, &mut rng) };
                m_bck = m_bck.min(m);
            }
            w26 * (centre_max - m_bck)
        })
        .collect())
}

/// Overlap coefficient `∫ min(f, g)` by the trapezoid rule on `[lo, hi]`.
pub fn overlap(f: impl Fn(f64) -> f64, g: impl Fn(f64) -> f64, lo: f64, hi: f64, steps: usize) -> f64 {
    let h = (hi - lo) / steps as f64;
    let m = |i: usize| {
        let x = lo + i as f64 * h;
        f(x).min(g(x))
    };
    let inner: f64 = (1..steps).map(m).sum();
    h * (inner + 0.5 * (m(0) + m(steps)))
}

/// Gaussian density helper used for curve output.
pub fn normal_pdf(x: f64, mu: f64, sigma: f64) -> f64 {
    let z = (x - mu) / sigma;
    (-0.5 * z * z).exp() / (sigma * (2.0 * std::f64::consts::PI).sqrt())
}

/// One row of the density table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityRow {
    pub gray: f64,
    pub background_mean: f64,
    pub target_mean: f64,
    pub max_gray: f64,
    pub max_gray_empirical: f64,
    pub background_pixel: f64,
    pub centre_pixel: f64,
}

/// Densities of the sub-region features and of single pixels on `grid`.
/// The empirical maximum-gray density is a histogram of `samples` with bins
/// centred on the grid points.
pub fn density_table(p: &AnalysisParams, grid: &[f64], samples: &[f64]) -> Result<Vec<DensityRow>> {
    let d = subregion_distributions(p)?;
    let max = MaxGrayDistribution::new(p)?;
    let step = if grid.len() > 1 { grid[1] - grid[0] } else { 1.0 };
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let count_below = |x: f64| sorted.partition_point(|s| *s < x) as f64;
    let n = samples.len().max(1) as f64;
    Ok(grid
        .iter()
        .map(|&g| DensityRow {
            gray: g,
            background_mean: normal_pdf(g, d.background.0, d.background.1),
            target_mean: normal_pdf(g, d.target.0, d.target.1),
            max_gray: max.pdf(g),
            max_gray_empirical: (count_below(g + step / 2.0) - count_below(g - step / 2.0)) / (n * step),
            background_pixel: normal_pdf(g, p.noise_mu, p.noise_sigma),
            centre_pixel: normal_pdf(g, p.layer_means[1], p.layer_stds[1]),
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn thirty_degree_occupancy() {
        let occ = layer_occupancy(30.0);
        assert_eq!(occ, [5, 5, 5]);
        assert_eq!(layer_occupancy(0.0), [5, 5, 5]);
    }

    #[test]
    fn all_background_subregion() {
        let p = AnalysisParams { occupancy: [0; 3], ..Default::default() };
        let d = subregion_distributions(&p).unwrap();
        assert_eq!(d.target, (30.0, 8.0 / 5.0));
        assert_eq!(d.background, d.target);
    }

    #[test]
    fn single_pixel_max_is_its_cdf() {
        let p = AnalysisParams { n0: 1, occupancy: [0, 1, 0], ..Default::default() };
        let m = MaxGrayDistribution::new(&p).unwrap();
        let n = Normal::new(p.layer_means[1], p.layer_stds[1]).unwrap();
        for g in [20.0, 40.0, 46.0, 60.0] {
            assert!((m.cdf(g) - n.cdf(g)).abs() < 1e-15);
            assert!((m.pdf(g) - n.pdf(g)).abs() < 1e-15);
        }
    }

    #[test]
    fn pdf_is_cdf_derivative() {
        let m = MaxGrayDistribution::new(&AnalysisParams::default()).unwrap();
        for g in [35.0, 45.0, 55.0] {
            let h = 1e-5;
            let num = (m.cdf(g + h) - m.cdf(g - h)) / (2.0 * h);
            assert!((num - m.pdf(g)).abs() < 1e-7);
        }
    }

    #[test]
    fn a1_closed_forms() {
        let p = AnalysisParams { k: 25, ..Default::default() };
        let (mu, _) = weighted_sum_distribution(&p).unwrap();
        assert!((mu - 30.0 * 25.0).abs() < 1e-9);
        let z = AnalysisParams { weights: [0.0; FEATURE_DIM], bias: 3.0, ..Default::default() };
        assert_eq!(weighted_sum_distribution(&z).unwrap(), (0.0, 0.0));
    }

    #[test]
    fn rejects_overfull_occupancy() {
        let p = AnalysisParams { occupancy: [10, 10, 10], ..Default::default() };
        assert!(subregion_distributions(&p).is_err());
    }
}
