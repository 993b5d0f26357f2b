//! How much the camera may rotate in one exposure before trails visibly curve.
//!
//! `cargo run --example camera_constraint`

use streaklite::sim::{max_rotation_angle, CameraGeometry};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // focal length in pixels; arch height limit of half a pixel
    let focal_length = 2000.0;
    println!("half FoV  max rotation (deg)");
    for half_fov_deg in [2.0, 5.0, 10.0, 15.0, 20.0] {
        let geom = CameraGeometry { half_fov_deg, focal_length, arch_height_limit: 0.5 };
        println!("{half_fov_deg:8.1}  {:.4}", max_rotation_angle(&geom)?);
    }
    Ok(())
}
