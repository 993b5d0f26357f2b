//! Full pipeline on one frame: crude classification, then oriented growth.
//!
//! `cargo run --release --example detect_streak`

use streaklite::classifier::train;
use streaklite::dataset::{generate_rows, DatasetConfig};
use streaklite::detector::{crude_classify, DEFAULT_MIN_SIZE};
use streaklite::eval::iou;
use streaklite::growth::{refine, results_csv, GrowthConfig};
use streaklite::image::{background_stats, NoiseParams};
use streaklite::sim::{calibrate_intensity, synthesize, StreakParams, IDEAL_MASK_THRESHOLD};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let model = train(&generate_rows(30_000, &DatasetConfig::default(), 1)?, &Default::default())?;

    let noise = NoiseParams::standard(11);
    let mut streaks = vec![
        StreakParams::new((50.0, 60.0), 25.0, 20.0, 0.0),
        StreakParams::new((120.0, 90.0), 110.0, 14.0, 0.0),
    ];
    for s in &mut streaks {
        s.intensity = calibrate_intensity(3.0, s, &noise)?;
    }
    let scene = synthesize(176, 144, &streaks, noise, IDEAL_MASK_THRESHOLD)?;

    let crude = crude_classify(&scene.noisy, &model, DEFAULT_MIN_SIZE)?;
    println!("{} crude component(s)", crude.len());

    let bg = background_stats(&scene.noisy);
    let results = refine(&scene.noisy, &crude, &bg, &GrowthConfig::default());
    print!("{}", results_csv(&results, None));

    let truth = scene.mask.pixels();
    for (i, r) in results.iter().enumerate() {
        println!(
            "component {i}: IoU with the true mask {:.3} crude, {:.3} grown",
            iou(r.crude.pixels(), &truth),
            iou(r.component.pixels(), &truth)
        );
    }
    Ok(())
}
