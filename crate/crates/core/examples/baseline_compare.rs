//! Directional matched filtering against the learned template on one frame.
//!
//! `cargo run --release --example baseline_compare`

use streaklite::baseline::BaselineDetector;
use streaklite::classifier::train;
use streaklite::dataset::{generate_rows, DatasetConfig};
use streaklite::detector::{crude_classify, DEFAULT_MIN_SIZE};
use streaklite::eval::bench::{bench_frame, benchmark};
use streaklite::image::{gaussian_background, NoiseParams};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let model = train(&generate_rows(30_000, &DatasetConfig::default(), 1)?, &Default::default())?;
    let baseline = BaselineDetector::calibrated(&gaussian_background(256, 256, NoiseParams::standard(99))?)?;
    println!(
        "baseline: {} kernels of {}x{}, threshold {:.2}",
        baseline.bank.kernels.len(),
        baseline.bank.kernel_size(),
        baseline.bank.kernel_size(),
        baseline.response_threshold
    );

    // eight PSNR-2 streaks over 640x480 of noise
    let frame = bench_frame(640, 480, 3)?;
    let ours = crude_classify(&frame, &model, DEFAULT_MIN_SIZE)?;
    let theirs = baseline.detect(&frame)?;
    println!("components: template {}, baseline {}", ours.len(), theirs.len());

    let r = benchmark(&model, &baseline, &frame, 5)?;
    println!(
        "per frame: template + growth {:.1} ms, baseline {:.1} ms ({:.1}x)",
        1e3 * r.proposed,
        1e3 * r.baseline,
        1.0 / r.ratio()
    );
    Ok(())
}
