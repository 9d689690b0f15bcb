//! Map the velocity change caused by a remote projection over the x-z
//! analysis window and report where it is non-negligible.
//!
//! Run with: cargo run --example velocity_change_map

use bohm_steer::packet::GaussianPacket;
use bohm_steer::state::{make_split_state, project, Outcome, ProjectionBasis, VelocityField};
use bohm_steer::trajectory::{velocity_change_map, PlaneGrid};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let wavenumber = 2.0 * std::f64::consts::PI / 808e-9;
    let d = 3e-3;
    let template = GaussianPacket::unit(0.0, 3e-4, 0.0, wavenumber)?;
    let split = make_split_state(d, &template)?;
    let unprojected = VelocityField::new(split.clone(), wavenumber);

    let xs: Vec<f64> = (0..161).map(|i| -4e-3 + 8e-3 * i as f64 / 160.0).collect();
    let grid = PlaneGrid::uniform(1.492, 4.5, 45)?;

    for theta_deg in [18.5, 62.9] {
        let basis = ProjectionBasis::from_degrees(theta_deg)?;
        let (state, _) = project(&split, basis, Outcome::Theta)?;
        let projected = VelocityField::new(state, wavenumber);
        let map = velocity_change_map(&xs, grid.planes(), &unprojected, &projected);

        let mut peak = 0.0f64;
        let mut peak_at = (0.0, 0.0);
        let mut significant = 0usize;
        let mut total = 0usize;
        for (iz, &z) in map.zs.iter().enumerate() {
            for (ix, &x) in map.xs.iter().enumerate() {
                let Some(dv) = map.get(ix, iz) else { continue };
                total += 1;
                if dv.abs() > 1e-5 {
                    significant += 1;
                }
                if dv.abs() > peak {
                    peak = dv.abs();
                    peak_at = (x, z);
                }
            }
        }
        println!(
            "theta={theta_deg:>5} deg: peak |dv|/c = {peak:.3e} at x={:.2} mm, z={:.3} m; \
             |dv|/c > 1e-5 on {significant}/{total} grid points",
            peak_at.0 * 1e3,
            peak_at.1,
        );
    }
    Ok(())
}
