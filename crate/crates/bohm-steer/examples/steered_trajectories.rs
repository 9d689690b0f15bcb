//! Trace the same launch points with and without a remote projection and
//! show how the projection steers them across the midline.
//!
//! Run with: cargo run --example steered_trajectories

use bohm_steer::packet::{GaussianPacket, Plane};
use bohm_steer::state::{make_split_state, project, Outcome, ProjectionBasis, VelocityField};
use bohm_steer::trajectory::{default_seeds, trace, trace_steered, OutcomeLabel, PlaneGrid};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let wavenumber = 2.0 * std::f64::consts::PI / 808e-9;
    let d = 3e-3;
    let template = GaussianPacket::unit(0.0, 3e-4, 0.0, wavenumber)?;
    let split = make_split_state(d, &template)?;
    let unprojected = VelocityField::new(split.clone(), wavenumber);

    let theta_deg = 18.5f64;
    let basis = ProjectionBasis::from_degrees(theta_deg)?;
    let (state, probability) = project(&split, basis, Outcome::Theta)?;
    let projected = VelocityField::new(state, wavenumber);
    println!("projection theta={theta_deg} deg, outcome probability {probability:.4}");

    let grid = PlaneGrid::uniform(1.492, 4.5, 45)?;
    let z_switch = grid.planes()[0];
    let label = OutcomeLabel {
        theta: theta_deg.to_radians(),
        outcome: Outcome::Theta,
    };
    let half_span = 2.0 * template.width_at(Plane::new(grid.planes()[0])?);
    let seeds = default_seeds(&[-d / 2.0, d / 2.0], half_span, 8);

    println!("{:>10} {:>12} {:>12} {:>8}", "x0 [mm]", "plain [mm]", "steered [mm]", "crossed");
    let mut crossings = 0;
    for &x0 in &seeds {
        let plain = trace(x0, &grid, &unprojected);
        let steered = trace_steered(x0, &grid, z_switch, &unprojected, &projected, label)?;
        let crossed = steered.points.iter().any(|&(x, _)| x.signum() != x0.signum());
        crossings += crossed as usize;
        println!(
            "{:>10.3} {:>12.3} {:>12.3} {:>8}",
            x0 * 1e3,
            plain.endpoint().0 * 1e3,
            steered.endpoint().0 * 1e3,
            if crossed { "yes" } else { "no" },
        );
    }
    println!("{crossings} of {} steered trajectories crossed x = 0", seeds.len());
    Ok(())
}
