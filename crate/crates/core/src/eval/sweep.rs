use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;

use crate::baseline::BaselineDetector;
use crate::classifier::LinearModel;
use crate::dataset::{simulate_sample, DatasetConfig, LabeledSample};
use crate::detector::{crude_classify, Component, DEFAULT_MIN_SIZE};
use crate::error::{Error, Result};
use crate::eval::metrics::{centroid, centroid_error, iou, CentroidWeights};
use crate::growth::{refine, GrowthConfig};
use crate::image::{background_stats, BackgroundStats};
use crate::rng;

/// IoU with the ideal mask above which a component counts as a detection.
pub const DETECTION_IOU: f64 = 0.3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepKind {
    Psnr,
    Length,
    NoiseSigma,
}

impl FromStr for SweepKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "psnr" => Ok(Self::Psnr),
            "length" => Ok(Self::Length),
            "noise_sigma" | "noise-sigma" => Ok(Self::NoiseSigma),
            _ => Err(Error::Config(format!("unknown sweep kind '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Method {
    Crude,
    Grown,
    Baseline,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Crude => "crude",
            Method::Grown => "grown",
            Method::Baseline => "baseline",
        })
    }
}

impl FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "crude" => Ok(Self::Crude),
            "grown" => Ok(Self::Grown),
            "baseline" => Ok(Self::Baseline),
            _ => Err(Error::Config(format!("unknown method '{s}'"))),
        }
    }
}

/// Outcome of one method on one simulated frame.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricRow {
    pub psnr: f64,
    /// Drawn streak length.
    pub length: f64,
    pub noise_sigma: f64,
    pub method: Method,
    pub trial: usize,
    /// Error of the best-matching component's centroid; `None` when no
    /// component overlaps the ideal mask.
    pub centroid_error: Option<f64>,
    /// Best IoU of any component with the ideal mask (0 without components).
    pub iou: f64,
    pub detected: bool,
    pub components: usize,
    pub runtime: f64,
}

/// Frame recipe and detector settings shared by every trial.
#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub kind: SweepKind,
    pub grid: Vec<f64>,
    pub trials: usize,
    pub methods: Vec<Method>,
    /// Recipe for the values not being swept. Its length range is replaced
    /// by `length_range`.
    pub base: DatasetConfig,
    /// Streak lengths are drawn uniformly from this range; a length sweep
    /// replaces it with the grid value.
    pub length_range: (f64, f64),
    pub min_size: usize,
    pub growth: GrowthConfig,
    pub centroid_weights: CentroidWeights,
    pub seed: u64,
}

impl SweepConfig {
    pub fn new(kind: SweepKind, grid: Vec<f64>, trials: usize, seed: u64) -> Self {
        Self {
            kind,
            grid,
            trials,
            methods: vec![Method::Crude, Method::Grown],
            base: DatasetConfig::default(),
            length_range: (16.0, 16.0),
            min_size: DEFAULT_MIN_SIZE,
            growth: GrowthConfig::default(),
            centroid_weights: CentroidWeights::default(),
            seed,
        }
    }

    fn point_config(&self, value: f64) -> DatasetConfig {
        let mut c = self.base;
        c.length_range = self.length_range;
        match self.kind {
            SweepKind::Psnr => c.psnr_target = value,
            SweepKind::Length => c.length_range = (value, value),
            SweepKind::NoiseSigma => c.noise_sigma = value,
        }
        c
    }
}

/// Detectors a sweep can run.
#[derive(Debug, Clone, Default)]
pub struct Detectors<'a> {
    pub model: Option<&'a LinearModel>,
    pub baseline: Option<&'a BaselineDetector>,
}

/// Best IoU component and its centroid error against the true centre.
fn score_components(
    sample: &LabeledSample,
    comps: &[Component],
    bg: &BackgroundStats,
    weights: CentroidWeights,
) -> (Option<f64>, f64) {
    let truth = sample.ideal_mask.pixels();
    let mut best: Option<(f64, &Component)> = None;
    for c in comps {
        let v = iou(c.pixels(), &truth);
        if v > 0.0 && best.is_none_or(|(b, _)| v > b) {
            best = Some((v, c));
        }
    }
    match best {
        None => (None, 0.0),
        Some((v, c)) => {
            let err = centroid(&sample.frame, c.pixels(), bg.mu_hat, weights)
                .ok()
                .map(|p| centroid_error(p, sample.streak.center));
            (err, v)
        }
    }
}

/// Runs every requested method on one sample.
pub fn evaluate_sample(
    sample: &LabeledSample,
    methods: &[Method],
    detectors: &Detectors<'_>,
    min_size: usize,
    growth: &GrowthConfig,
    weights: CentroidWeights,
) -> Result<Vec<(Method, Option<f64>, f64, usize, f64)>> {
    let bg = background_stats(&sample.frame);
    let mut out = Vec::with_capacity(methods.len());
    for &m in methods {
        let start = Instant::now();
        let comps = match m {
            Method::Crude | Method::Grown => {
                let model = detectors
                    .model
                    .ok_or_else(|| Error::Config(format!("method {m} needs a classifier model")))?;
                let crude = crude_classify(&sample.frame, model, min_size)?;
                if m == Method::Grown {
                    refine(&sample.frame, &crude, &bg, growth).into_iter().map(|r| r.component).collect()
                } else {
                    crude
                }
            }
            Method::Baseline => detectors
                .baseline
                .ok_or_else(|| Error::Config("baseline method needs a calibrated detector".into()))?
                .detect(&sample.frame)?,
        };
        let runtime = start.elapsed().as_secs_f64();
        let (err, v) = score_components(sample, &comps, &bg, weights);
        out.push((m, err, v, comps.len(), runtime));
    }
    Ok(out)
}

/// Simulates `trials` frames per grid point and scores each method. Trial `t`
/// uses the sub-seed `sub_seed(seed, t)` at every grid point, so points differ
/// only in the swept value.
pub fn run_sweep(config: &SweepConfig, detectors: &Detectors<'_>) -> Result<Vec<MetricRow>> {
    if config.grid.is_empty() {
        return Err(Error::InvalidParameter("sweep grid is empty".into()));
    }
    if config.trials == 0 || config.methods.is_empty() {
        return Err(Error::InvalidParameter("sweep needs at least one trial and one method".into()));
    }
    let mut rows = Vec::new();
    for &value in &config.grid {
        let point = config.point_config(value);
        point.validate()?;
        let per_trial: Vec<Result<Vec<MetricRow>>> = (0..config.trials)
            .into_par_iter()
            .map(|t| {
                let mut r = rng::seeded(rng::sub_seed(config.seed, t as u64));
                let sample = simulate_sample(&point, &mut r)?;
                let results =
                    evaluate_sample(&sample, &config.methods, detectors, config.min_size, &config.growth, config.centroid_weights)?;
                Ok(results
                    .into_iter()
                    .map(|(method, err, v, n, runtime)| MetricRow {
                        psnr: point.psnr_target,
                        length: sample.streak.length,
                        noise_sigma: point.noise_sigma,
                        method,
                        trial: t,
                        centroid_error: err,
                        iou: v,
                        detected: v >= DETECTION_IOU,
                        components: n,
                        runtime,
                    })
                    .collect())
            })
            .collect();
        for r in per_trial {
            rows.extend(r?);
        }
    }
    Ok(rows)
}

/// Per-point aggregate of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSummary {
    pub value: f64,
    pub method: Method,
    pub trials: usize,
    pub mean_iou: f64,
    /// Mean over trials with a matched component.
    pub mean_centroid_error: f64,
    pub detection_rate: f64,
    /// Share of trials with exactly one component, and that one detected.
    pub single_detection_rate: f64,
}

pub fn summarize(rows: &[MetricRow], kind: SweepKind) -> Vec<SweepSummary> {
    let key = |r: &MetricRow| match kind {
        SweepKind::Psnr => r.psnr,
        SweepKind::Length => r.length,
        SweepKind::NoiseSigma => r.noise_sigma,
    };
    let mut groups: Vec<(f64, Method, Vec<&MetricRow>)> = Vec::new();
    for r in rows {
        match groups.iter_mut().find(|(v, m, _)| *v == key(r) && *m == r.method) {
            Some(g) => g.2.push(r),
            None => groups.push((key(r), r.method, vec![r])),
        }
    }
    groups
        .into_iter()
        .map(|(value, method, rs)| {
            let n = rs.len() as f64;
            let errs: Vec<f64> = rs.iter().filter_map(|r| r.centroid_error).collect();
            SweepSummary {
                value,
                method,
                trials: rs.len(),
                mean_iou: rs.iter().map(|r| r.iou).sum::<f64>() / n,
                mean_centroid_error: if errs.is_empty() { f64::NAN } else { errs.iter().sum::<f64>() / errs.len() as f64 },
                detection_rate: rs.iter().filter(|r| r.detected).count() as f64 / n,
                single_detection_rate: rs.iter().filter(|r| r.detected && r.components == 1).count() as f64 / n,
            }
        })
        .collect()
}

pub fn rows_csv(rows: &[MetricRow], comment: Option<&str>) -> Result<String> {
    let mut out = Vec::new();
    if let Some(c) = comment {
        out.extend_from_slice(format!("# {c}\n").as_bytes());
    }
    {
        let mut w = csv::Writer::from_writer(&mut out);
        w.write_record([
            "psnr",
            "length",
            "noise_sigma",
            "method",
            "trial",
            "centroid_error",
            "iou",
            "detected",
            "components",
            "runtime",
        ])?;
        for r in rows {
            w.write_record([
                r.psnr.to_string(),
                r.length.to_string(),
                r.noise_sigma.to_string(),
                r.method.to_string(),
                r.trial.to_string(),
                r.centroid_error.map_or(String::new(), |e| format!("{e:.6}")),
                format!("{:.6}", r.iou),
                r.detected.to_string(),
                r.components.to_string(),
                format!("{:.6e}", r.runtime),
            ])?;
        }
        w.flush()?;
    }
    Ok(String::from_utf8(out).expect("csv output is utf-8"))
}
