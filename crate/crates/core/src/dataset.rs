//! Labelled training data from simulated frames.
//!
//! Each frame carries one streak with uniformly drawn angle and length whose
//! intensity is calibrated to a target PSNR. Rows are sampled per frame so that
//! background and target pixels appear in a 60:40 ratio; a configurable share
//! of the background rows comes from a thin band just outside the ideal mask,
//! which is where the classifier has to draw its boundary.

use std::io::{Read, Write};

use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;
use rayon::prelude::*;

use crate::classifier::LabeledRow;
use crate::error::{Error, Result};
use crate::features::{extract_features, template_fits, FeatureVector, FEATURE_DIM};
use crate::image::{Frame, Mask, NoiseParams};
use crate::rng;
use crate::sim::{self, StreakParams};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DatasetConfig {
    pub frame_size: usize,
    pub noise_mu: f64,
    pub noise_sigma: f64,
    pub psnr_target: f64,
    /// Angle range in degrees, drawn uniformly.
    pub angle_range: (f64, f64),
    /// Length range in pixels, drawn uniformly.
    pub length_range: (f64, f64),
    pub psf_sigma: f64,
    /// Maximum offset of the streak centre from the frame centre, pixels.
    pub center_jitter: f64,
    pub mask_threshold: f64,
    /// Upper bound on target rows taken from one frame.
    pub targets_per_frame: usize,
    /// Fraction of all rows that are targets.
    pub target_share: f64,
    /// Fraction of background rows taken from the band around the mask.
    pub edge_share: f64,
    /// Chebyshev width of that band, pixels.
    pub edge_band: usize,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        Self {
            frame_size: 64,
            noise_mu: 30.0,
            noise_sigma: 8.0,
            psnr_target: 2.0,
            angle_range: (0.0, 180.0),
            length_range: (10.0, 22.0),
            psf_sigma: sim::DEFAULT_PSF_SIGMA,
            center_jitter: 4.0,
            mask_threshold: sim::IDEAL_MASK_THRESHOLD,
            targets_per_frame: 40,
            target_share: 0.4,
            edge_share: 0.5,
            edge_band: 3,
        }
    }
}

impl DatasetConfig {
    pub fn validate(&self) -> Result<()> {
        let (a0, a1) = self.angle_range;
        let (l0, l1) = self.length_range;
        let bad = |m: &str| Err(Error::InvalidParameter(m.to_string()));
        if !(a0 <= a1) || !(l0 <= l1) || l0 < 0.0 {
            return bad("angle and length ranges must be non-empty and ordered");
        }
        if !(self.psnr_target > 0.0) || !(self.noise_sigma >= 0.0) || !(self.psf_sigma > 0.0) {
            return bad("psnr target, noise sigma and PSF sigma must be positive");
        }
        if !(self.target_share > 0.0 && self.target_share < 1.0) || !(0.0..=1.0).contains(&self.edge_share) {
            return bad("shares must lie in (0, 1)");
        }
        if self.frame_size < 25 || self.targets_per_frame == 0 {
            return bad("frame must be at least 25 pixels and hold at least one target row");
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct LabeledSample {
    pub frame: Frame,
    pub clean: Frame,
    pub ideal_mask: Mask,
    pub streak: StreakParams,
    /// PSNR of the noiseless streak against the true noise parameters.
    pub psnr: f64,
}

#[derive(Debug, Clone)]
pub struct Dataset {
    pub samples: Vec<LabeledSample>,
    pub rows: Vec<LabeledRow>,
    /// Pixel coordinates of each row, parallel to `rows`, with the sample index.
    pub row_origin: Vec<(usize, usize, usize)>,
}

const MAX_PLACEMENT_ATTEMPTS: usize = 1000;

/// Draws a streak whose mask plus band stays inside the classifiable interior,
/// with its intensity calibrated to the target PSNR.
pub fn random_streak(config: &DatasetConfig, rng: &mut impl Rng) -> Result<StreakParams> {
    config.validate()?;
    let noise = NoiseParams { mu: config.noise_mu, sigma: config.noise_sigma, seed: 0 };
    let size = config.frame_size;
    let mid = (size - 1) as f64 / 2.0;
    let lo = crate::features::HALF_TEMPLATE as i64 + config.edge_band as i64;
    let hi = size as i64 - 1 - lo;
    for _ in 0..MAX_PLACEMENT_ATTEMPTS {
        let angle = uniform(rng, config.angle_range);
        let length = uniform(rng, config.length_range);
        let cx = mid + uniform(rng, (-config.center_jitter, config.center_jitter));
        let cy = mid + uniform(rng, (-config.center_jitter, config.center_jitter));
        let mut s = StreakParams::new((cx, cy), angle, length, 0.0);
        s.psf_sigma = config.psf_sigma;
        let (x0, x1, y0, y1) = s.footprint();
        if x0 < 0 || y0 < 0 || x1 >= size as i64 || y1 >= size as i64 {
            continue;
        }
        s.intensity = sim::calibrate_intensity(config.psnr_target, &s, &noise)?;
        // the mask can never reach past the footprint, but keep the band classifiable too
        let patch = sim::render_patch(&s)?;
        let inside = patch
            .iter()
            .filter(|(_, _, v)| *v >= config.mask_threshold)
            .all(|(x, y, _)| x >= lo && y >= lo && x <= hi && y <= hi);
        if inside {
            return Ok(s);
        }
    }
    Err(Error::InvalidParameter(format!(
        "could not place a streak inside a {size}px frame after {MAX_PLACEMENT_ATTEMPTS} attempts"
    )))
}

fn uniform(rng: &mut impl Rng, (a, b): (f64, f64)) -> f64 {
    if a == b {
        a
    } else {
        rng.random_range(a..b)
    }
}

/// One frame and its sampled rows.
fn build_frame(index: usize, config: &DatasetConfig, seed: u64) -> Result<(LabeledSample, Vec<LabeledRow>, Vec<(usize, usize)>)> {
    let mut rng = rng::seeded(rng::sub_seed(seed, index as u64));
    let sample = simulate_sample(config, &mut rng)?;
    let size = config.frame_size;

    let band = config.edge_band as i64;
    let (mut targets, mut edge, mut far) = (Vec::new(), Vec::new(), Vec::new());
    for y in 0..size {
        for x in 0..size {
            if !template_fits(size, size, x, y) {
                continue;
            }
            if sample.ideal_mask.get(x, y) {
                targets.push((x, y));
                continue;
            }
            let near = (-band..=band).any(|dy| {
                (-band..=band).any(|dx| {
                    let (nx, ny) = (x as i64 + dx, y as i64 + dy);
                    nx >= 0 && ny >= 0 && (nx as usize) < size && (ny as usize) < size && sample.ideal_mask.get(nx as usize, ny as usize)
                })
            });
            if near {
                edge.push((x, y));
            } else {
                far.push((x, y));
            }
        }
    }

    let n_t = targets.len().min(config.targets_per_frame);
    let n_b = (n_t as f64 * (1.0 - config.target_share) / config.target_share).round() as usize;
    let n_edge = ((n_b as f64 * config.edge_share).round() as usize).min(edge.len());
    let n_far = (n_b - n_edge).min(far.len());

    let mut picked: Vec<((usize, usize), bool)> = Vec::with_capacity(n_t + n_b);
    picked.extend(targets.choose_multiple(&mut rng, n_t).map(|p| (*p, true)));
    picked.extend(edge.choose_multiple(&mut rng, n_edge).map(|p| (*p, false)));
    picked.extend(far.choose_multiple(&mut rng, n_far).map(|p| (*p, false)));
    picked.shuffle(&mut rng);

    let mut rows = Vec::with_capacity(picked.len());
    let mut origin = Vec::with_capacity(picked.len());
    for ((x, y), label) in picked {
        rows.push(LabeledRow { features: extract_features(&sample.frame, x, y)?, label });
        origin.push((x, y));
    }
    Ok((sample, rows, origin))
}

/// One single-streak frame: a random streak from [`random_streak`] over
/// noise seeded from the next value of `rng`.
pub fn simulate_sample(config: &DatasetConfig, rng: &mut impl Rng) -> Result<LabeledSample> {
    let streak = random_streak(config, rng)?;
    let noise = NoiseParams { mu: config.noise_mu, sigma: config.noise_sigma, seed: rng.next_u64() };
    let size = config.frame_size;
    let scene = sim::synthesize(size, size, &[streak], noise, config.mask_threshold)?;
    Ok(LabeledSample {
        frame: scene.noisy,
        clean: scene.clean,
        ideal_mask: scene.mask,
        streak,
        psnr: config.psnr_target,
    })
}

/// Generates `n_frames` labelled frames and their rows. Frame `i` draws from
/// the sub-seed `sub_seed(seed, i)`, so the result does not depend on threading.
pub fn generate_dataset(n_frames: usize, config: &DatasetConfig, seed: u64) -> Result<Dataset> {
    if n_frames == 0 {
        return Err(Error::InvalidParameter("n_frames must be > 0".into()));
    }
    config.validate()?;
    let built: Vec<_> = (0..n_frames)
        .into_par_iter()
        .map(|i| build_frame(i, config, seed))
        .collect::<Result<_>>()?;
    let mut ds = Dataset { samples: Vec::new(), rows: Vec::new(), row_origin: Vec::new() };
    for (i, (sample, rows, origin)) in built.into_iter().enumerate() {
        ds.samples.push(sample);
        ds.rows.extend(rows);
        ds.row_origin.extend(origin.into_iter().map(|(x, y)| (i, x, y)));
    }
    Ok(ds)
}

/// Rows only, generating whole frames until at least `min_rows` exist.
pub fn generate_rows(min_rows: usize, config: &DatasetConfig, seed: u64) -> Result<Vec<LabeledRow>> {
    config.validate()?;
    const BATCH: usize = 64;
    let mut rows = Vec::with_capacity(min_rows + BATCH * config.targets_per_frame * 3);
    let mut next = 0usize;
    while rows.len() < min_rows {
        let batch: Vec<Vec<LabeledRow>> = (next..next + BATCH)
            .into_par_iter()
            .map(|i| build_frame(i, config, seed).map(|(_, r, _)| r))
            .collect::<Result<_>>()?;
        for r in batch {
            if rows.len() >= min_rows {
                break;
            }
            rows.extend(r);
        }
        next += BATCH;
    }
    Ok(rows)
}

/// Writes `x1..x26,label` rows, preceded by an optional `#` comment line.
pub fn write_rows_csv<W: Write>(out: W, rows: &[LabeledRow], comment: Option<&str>) -> Result<()> {
    let mut out = out;
    if let Some(c) = comment {
        writeln!(out, "# {c}")?;
    }
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<String> = (1..=FEATURE_DIM).map(|i| format!("x{i}")).collect();
    header.push("label".into());
    w.write_record(&header)?;
    for r in rows {
        let mut rec: Vec<String> = r.features.values().iter().map(|v| format!("{v:.17e}")).collect();
        rec.push(if r.label { "1".into() } else { "0".into() });
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_rows_csv<R: Read>(input: R) -> Result<Vec<LabeledRow>> {
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(input);
    let headers = rdr.headers()?.clone();
    if headers.len() != FEATURE_DIM + 1 || headers.get(FEATURE_DIM) != Some("label") {
        return Err(Error::InvalidParameter(format!("unexpected dataset header {headers:?}")));
    }
    let mut rows = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let mut v = [0.0; FEATURE_DIM];
        for (j, x) in v.iter_mut().enumerate() {
            *x = rec[j]
                .trim()
                .parse()
                .map_err(|_| Error::InvalidParameter(format!("row {}: bad value {:?}", line + 1, &rec[j])))?;
        }
        let label = match rec[FEATURE_DIM].trim() {
            "0" => false,
            "1" => true,
            other => return Err(Error::InvalidParameter(format!("row {}: bad label {other:?}", line + 1))),
        };
        rows.push(LabeledRow { features: FeatureVector(v), label });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_frame_reproducible() {
        let cfg = DatasetConfig::default();
        let a = generate_dataset(1, &cfg, 77).unwrap();
        let b = generate_dataset(1, &cfg, 77).unwrap();
        assert_eq!(a.samples[0].frame, b.samples[0].frame);
        assert_eq!(a.rows, b.rows);
    }

    #[test]
    fn labels_agree_with_mask() {
        let cfg = DatasetConfig::default();
        let ds = generate_dataset(6, &cfg, 5).unwrap();
        for (row, &(i, x, y)) in ds.rows.iter().zip(&ds.row_origin) {
            let s = &ds.samples[i];
            // recompute the mask from the clean frame independently
            let above = s.clean.get(x, y) - cfg.noise_mu >= cfg.mask_threshold;
            assert_eq!(row.label, above);
            assert_eq!(row.features, extract_features(&s.frame, x, y).unwrap());
        }
    }

    #[test]
    fn ratio_close_to_sixty_forty() {
        let rows = generate_rows(5000, &DatasetConfig::default(), 1).unwrap();
        let share = rows.iter().filter(|r| r.label).count() as f64 / rows.len() as f64;
        assert!((share - 0.4).abs() < 0.02, "{share}");
    }

    #[test]
    fn bad_ranges_rejected() {
        let cfg = DatasetConfig { length_range: (22.0, 10.0), ..Default::default() };
        assert!(generate_dataset(1, &cfg, 1).is_err());
        assert!(generate_dataset(0, &DatasetConfig::default(), 1).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let rows = generate_dataset(2, &DatasetConfig::default(), 3).unwrap().rows;
        let mut buf = Vec::new();
        write_rows_csv(&mut buf, &rows, Some("test")).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.lines().nth(1).unwrap().starts_with("x1,x2,"));
        assert_eq!(read_rows_csv(&buf[..]).unwrap(), rows);
    }
}
