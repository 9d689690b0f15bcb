//! Synthesize a pair of noisy detector images at one plane, run the full
//! extraction pipeline on them, and compare against the analytic velocity.
//!
//! Run with: cargo run --example weak_measurement_roundtrip

use bohm_steer::packet::{GaussianPacket, Plane};
use bohm_steer::state::{make_split_state, VelocityField, SPEED_OF_LIGHT};
use bohm_steer::weakmeas::{
    extract_weak_momentum, normalize_images, synthesize_images, window_positions, CouplingModel,
    SensorGeometry, DEFAULT_COUNT_FLOOR,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let wavenumber = 2.0 * std::f64::consts::PI / 808e-9;
    let template = GaussianPacket::unit(0.0, 3e-4, 0.0, wavenumber)?;
    let split = make_split_state(3e-3, &template)?;
    let field = VelocityField::new(split, wavenumber);
    let plane = Plane::new(2.8)?;

    let model = CouplingModel::new(336.0, 0.0)?;
    let geometry = SensorGeometry::new(0.013, 0.2)?;
    let center = 480.0;
    let pair = synthesize_images(&field, plane, &model, &geometry, center, center, 1e7, 42)?;
    println!(
        "photons: {} (R) + {} (L)",
        pair.r.counts.iter().sum::<u64>(),
        pair.l.counts.iter().sum::<u64>(),
    );

    let normalized = normalize_images(&pair.r, &pair.l)?;
    let profile = extract_weak_momentum(&normalized, &model, DEFAULT_COUNT_FLOOR);
    let positions = window_positions(center, geometry.pixel_pitch_mm, geometry.beta)?;

    let mut sq = 0.0;
    let mut count = 0usize;
    let mut max_v = 0.0f64;
    let peak = field.state().peak_density_estimate(plane);
    for (&x, ratio) in positions.iter().zip(&profile.k_ratio) {
        if field.density(x, plane) < 0.05 * peak {
            continue;
        }
        let truth = field.velocity(x, plane)? / SPEED_OF_LIGHT;
        max_v = max_v.max(truth.abs());
        if let Some(v) = ratio {
            sq += (v - truth) * (v - truth);
            count += 1;
        }
    }
    let rms = (sq / count as f64).sqrt();
    println!("recovered v/c on {count} pixels, RMS error {rms:.3e}");
    println!("relative to the plane's top speed {max_v:.3e}: {:.2}%", 100.0 * rms / max_v);
    Ok(())
}
