//! Accuracy of the crude map, the grown result and the baseline across PSNR.
//!
//! `cargo run --release --example psnr_sweep`

use streaklite::baseline::BaselineDetector;
use streaklite::classifier::train;
use streaklite::dataset::{generate_rows, DatasetConfig};
use streaklite::eval::{run_sweep, summarize, Detectors, Method, SweepConfig, SweepKind};
use streaklite::image::{gaussian_background, NoiseParams};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let model = train(&generate_rows(30_000, &DatasetConfig::default(), 1)?, &Default::default())?;
    let baseline = BaselineDetector::calibrated(&gaussian_background(256, 256, NoiseParams::standard(99))?)?;

    let mut config = SweepConfig::new(SweepKind::Psnr, vec![1.5, 2.0, 3.0, 5.0], 60, 7);
    config.length_range = (10.0, 22.0);
    config.methods = vec![Method::Crude, Method::Grown, Method::Baseline];
    let rows = run_sweep(&config, &Detectors { model: Some(&model), baseline: Some(&baseline) })?;

    println!("psnr  method     IoU    centroid px  detected  single");
    for s in summarize(&rows, SweepKind::Psnr) {
        println!(
            "{:4.1}  {:<9} {:6.3}  {:11.3}  {:8.2}  {:6.2}",
            s.value, s.method.to_string(), s.mean_iou, s.mean_centroid_error, s.detection_rate, s.single_detection_rate
        );
    }
    Ok(())
}
