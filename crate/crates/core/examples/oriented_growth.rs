//! Growth from a short seed under each axis initialisation and scoring rule.
//!
//! `cargo run --release --example oriented_growth`

use streaklite::detector::Component;
use streaklite::growth::{refine, AxisInit, AxisScore, GrowthConfig};
use streaklite::image::{background_stats, NoiseParams};
use streaklite::sim::{calibrate_intensity, synthesize, StreakParams, IDEAL_MASK_THRESHOLD};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let noise = NoiseParams::standard(5);
    let mut s = StreakParams::new((48.0, 48.0), 30.0, 30.0, 0.0);
    s.intensity = calibrate_intensity(2.5, &s, &noise)?;
    let scene = synthesize(96, 96, &[s], noise, IDEAL_MASK_THRESHOLD)?;
    let bg = background_stats(&scene.noisy);

    // a seed covering only the middle of the trail, as a crude map might
    let seed = Component::from_pixels(
        scene.mask.pixels().into_iter().filter(|&(x, y)| (x as f64 - 48.0).hypot(y as f64 - 48.0) <= 6.0).collect(),
    );
    println!("true streak: 30.0 deg, 30 px; seed has {} pixels\n", seed.len());

    println!("init       score     angle   fwd  bwd  stop (fwd/bwd)        size");
    for init in [AxisInit::Principal, AxisInit::Furthest] {
        for score in [AxisScore::Contrast, AxisScore::Ajpd] {
            let config = GrowthConfig { init, score, l_max: 20, ..GrowthConfig::default() };
            let r = &refine(&scene.noisy, std::slice::from_ref(&seed), &bg, &config)[0];
            println!(
                "{:<10} {:<9} {:6.2} {:5} {:4}  {:<21} {}",
                format!("{init:?}"),
                format!("{score:?}"),
                r.angle_deg(),
                r.grew_forward,
                r.grew_backward,
                format!("{:?}/{:?}", r.stop_forward, r.stop_backward).replace("Some(", "").replace(')', ""),
                r.component.len()
            );
        }
    }
    Ok(())
}
