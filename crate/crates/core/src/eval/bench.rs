use std::time::Instant;

use crate::baseline::BaselineDetector;
use crate::classifier::LinearModel;
use crate::detector::{crude_classify, DEFAULT_MIN_SIZE};
use crate::error::{Error, Result};
use crate::growth::{refine, GrowthConfig};
use crate::image::{background_stats, gaussian_background, Frame, NoiseParams};
use crate::rng;
use crate::sim::{calibrate_intensity, render_streak, StreakParams};

#[derive(Debug, Clone, PartialEq)]
pub struct BenchReport {
    pub width: usize,
    pub height: usize,
    pub repetitions: usize,
    /// Mean seconds per frame, crude classification plus growth.
    pub proposed: f64,
    /// Mean seconds per frame for the directional-filter baseline.
    pub baseline: f64,
}

impl BenchReport {
    /// `proposed / baseline`.
    pub fn ratio(&self) -> f64 {
        self.proposed / self.baseline
    }

    pub fn to_csv(&self, comment: Option<&str>) -> String {
        let mut s = String::new();
        if let Some(c) = comment {
            s.push_str(&format!("# {c}\n"));
        }
        s.push_str("width,height,repetitions,proposed_s,baseline_s,ratio\n");
        s.push_str(&format!(
            "{},{},{},{:.6},{:.6},{:.4}\n",
            self.width,
            self.height,
            self.repetitions,
            self.proposed,
            self.baseline,
            self.ratio()
        ));
        s
    }
}

/// A noise frame with a few PSNR-2 streaks spread over it.
pub fn bench_frame(width: usize, height: usize, seed: u64) -> Result<Frame> {
    let noise = NoiseParams { seed, ..NoiseParams::standard(seed) };
    let mut frame = gaussian_background(width, height, noise)?;
    let mut rng = rng::seeded(rng::sub_seed(seed, 1));
    use rand::Rng;
    for _ in 0..8 {
        let cx = rng.random_range(40.0..(width as f64 - 40.0).max(41.0));
        let cy = rng.random_range(40.0..(height as f64 - 40.0).max(41.0));
        let mut s = StreakParams::new((cx, cy), rng.random_range(0.0..180.0), rng.random_range(10.0..22.0), 0.0);
        s.intensity = calibrate_intensity(2.0, &s, &noise)?;
        frame = render_streak(&frame, &s)?;
    }
    Ok(frame)
}

fn time_mean(reps: usize, mut f: impl FnMut() -> Result<()>) -> Result<f64> {
    f()?; // warm-up, discarded
    let start = Instant::now();
    for _ in 0..reps {
        f()?;
    }
    Ok(start.elapsed().as_secs_f64() / reps as f64)
}

/// Times both detectors on the same frame on a single worker thread.
pub fn benchmark(
    model: &LinearModel,
    baseline: &BaselineDetector,
    frame: &Frame,
    repetitions: usize,
) -> Result<BenchReport> {
    if repetitions == 0 {
        return Err(Error::InvalidParameter("benchmark needs at least one repetition".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let growth = GrowthConfig::default();
    pool.install(|| {
        let proposed = time_mean(repetitions, || {
            let bg = background_stats(frame);
            let crude = crude_classify(frame, model, DEFAULT_MIN_SIZE)?;
            std::hint::black_box(refine(frame, &crude, &bg, &growth));
            Ok(())
        })?;
        let base = time_mean(repetitions, || {
            std::hint::black_box(baseline.detect(frame)?);
            Ok(())
        })?;
        Ok(BenchReport {
            width: frame.width(),
            height: frame.height(),
            repetitions,
            proposed,
            baseline: base,
        })
    })
}
