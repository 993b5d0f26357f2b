//! Renders a handful of labelled frames and the feature rows drawn from them.
//!
//! `cargo run --example simulate_dataset`

use streaklite::dataset::{generate_dataset, write_rows_csv, DatasetConfig};
use streaklite::pgm::{save_mask, save_pgm};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let config = DatasetConfig { psnr_target: 3.0, ..DatasetConfig::default() };
    let data = generate_dataset(6, &config, 42)?;

    println!("frame  centre            angle   length  psnr");
    for (i, s) in data.samples.iter().enumerate() {
        let p = &s.streak;
        println!(
            "{i:>5}  ({:6.2}, {:6.2})  {:6.1}  {:6.1}  {:.2}",
            p.center.0, p.center.1, p.angle_deg, p.length, s.psnr
        );
    }

    let targets = data.rows.iter().filter(|r| r.label).count();
    println!("\n{} rows, {targets} on a streak", data.rows.len());

    let mut csv = Vec::new();
    write_rows_csv(&mut csv, &data.rows[..3], Some("first rows"))?;
    print!("{}", String::from_utf8(csv)?);

    let dir = std::env::temp_dir().join("streaklite-simulate");
    std::fs::create_dir_all(&dir)?;
    save_pgm(&data.samples[0].frame, dir.join("frame.pgm"))?;
    save_mask(&data.samples[0].ideal_mask, dir.join("mask.pgm"))?;
    println!("\nfirst frame and its mask written to {}", dir.display());
    Ok(())
}
