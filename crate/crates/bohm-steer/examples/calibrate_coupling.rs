//! Recover the weak-measurement coupling strength from a synthetic
//! polarizer tilt sweep, both noiseless and at finite photon budget.
//!
//! Run with: cargo run --example calibrate_coupling

use bohm_steer::weakmeas::{
    calibrate_zeta, default_tilt_angles, synthesize_sweep, ArcsinBranchMode, SweepNoise,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let zeta = 336.0;
    let phi0 = 0.04;
    let angles = default_tilt_angles();

    let sweep = synthesize_sweep(zeta, phi0, &angles, None);
    let fit = calibrate_zeta(&sweep, ArcsinBranchMode::Unwrap)?;
    println!(
        "noiseless: zeta = {:.3} +- {:.3}, phi0 = {:.5} +- {:.5}",
        fit.model.zeta, fit.zeta_stderr, fit.model.phi0, fit.phi0_stderr,
    );

    for seed in [1, 2, 3] {
        let noise = SweepNoise { photons_per_point: 1e6, seed };
        let sweep = synthesize_sweep(zeta, phi0, &angles, Some(noise));
        let fit = calibrate_zeta(&sweep, ArcsinBranchMode::Unwrap)?;
        println!(
            "1e6 photons/point, seed {seed}: zeta = {:.2} +- {:.2}, phi0 = {:.5}",
            fit.model.zeta, fit.zeta_stderr, fit.model.phi0,
        );
    }
    Ok(())
}
