//! Why tile means and the tile maximum separate faint trails from noise.
//!
//! `cargo run --release --example template_analysis`

use streaklite::eval::analysis::{
    density_table, ks_statistic, layer_occupancy, max_gray_samples, normal_pdf, overlap, subregion_distributions,
    weighted_sum_distribution, AnalysisParams, MaxGrayDistribution,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let p = AnalysisParams::default();
    let d = subregion_distributions(&p)?;
    let max = MaxGrayDistribution::new(&p)?;
    println!("layer pixels per tile at 30 deg: {:?}", layer_occupancy(30.0));
    println!("background tile mean N({:.2}, {:.3}^2)", d.background.0, d.background.1);
    println!("target tile mean     N({:.2}, {:.3}^2)", d.target.0, d.target.1);

    let (mu, sigma) = weighted_sum_distribution(&p)?;
    println!("weighted sum with unit weights N({mu:.2}, {sigma:.3}^2)");

    let single = overlap(|x| normal_pdf(x, p.noise_mu, p.noise_sigma), |x| normal_pdf(x, p.layer_means[1], 8.0), 0.0, 150.0, 20_000);
    let means = overlap(
        |x| normal_pdf(x, d.background.0, d.background.1),
        |x| normal_pdf(x, d.target.0, d.target.1),
        0.0,
        150.0,
        20_000,
    );
    println!("\ndensity overlap: single pixels {single:.3}, tile means {means:.3}");

    let samples = max_gray_samples(&p, 50_000, 3)?;
    println!("max-gray KS distance to the analytic law: {:.4}", ks_statistic(&samples, |g| max.cdf(g)));

    let grid: Vec<f64> = (0..12).map(|i| 20.0 + 5.0 * i as f64).collect();
    println!("\ngray   bg-mean  target   max     max(emp)");
    for r in density_table(&p, &grid, &samples)? {
        println!(
            "{:4.0}  {:7.4}  {:7.4}  {:6.4}  {:6.4}",
            r.gray, r.background_mean, r.target_mean, r.max_gray, r.max_gray_empirical
        );
    }
    Ok(())
}
