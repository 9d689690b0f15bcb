//! Forward detector model: expected intensities and Poisson photon counts for
//! the two circular-polarization ports.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Poisson};

use super::{
    window_positions, CouplingModel, DetectorImage, WeakMeasError, WINDOW_WIDTH,
};
use crate::packet::Plane;
use crate::state::VelocityField;

/// Pixel pitch and magnification of the emulated sensor.
#[derive(Debug, Clone, Copy)]
pub struct SensorGeometry {
    pub pixel_pitch_mm: f64,
    pub beta: f64,
}

impl SensorGeometry {
    pub fn new(pixel_pitch_mm: f64, beta: f64) -> Result<Self, WeakMeasError> {
        if !(beta.is_finite() && beta > 0.0) {
            return Err(WeakMeasError::InvalidBeta(beta));
        }
        Ok(SensorGeometry { pixel_pitch_mm, beta })
    }

    /// Transverse width of one pixel in metres.
    pub fn pixel_width_m(&self) -> f64 {
        self.pixel_pitch_mm * 1e-3 / self.beta
    }
}

/// Expected (unnormalized) intensities of both window ports plus diagnostics.
#[derive(Debug, Clone)]
pub struct WindowMeans {
    pub mu_r: Vec<f64>,
    pub mu_l: Vec<f64>,
    /// positions of the R-window pixels in metres
    pub positions_r: Vec<f64>,
    pub positions_l: Vec<f64>,
    /// pixels with non-negligible density whose coupling phase left (-pi/2, pi/2)
    pub phase_overrange: usize,
}

/// Expected per-pixel intensities mu_R ~ rho (1 + sin phi), mu_L ~ rho
/// (1 - sin phi) over the two 321-pixel windows, in the infinite-budget limit.
///
/// Each port is evaluated on its own window grid; `r_center` / `l_center` are
/// the fitted fractional-pixel centers in sensor coordinates.
pub fn synthesize_means(
    field: &VelocityField,
    plane: Plane,
    model: &CouplingModel,
    geometry: &SensorGeometry,
    r_center: f64,
    l_center: f64,
) -> Result<WindowMeans, WeakMeasError> {
    let positions_r = window_positions(r_center, geometry.pixel_pitch_mm, geometry.beta)?;
    let positions_l = window_positions(l_center, geometry.pixel_pitch_mm, geometry.beta)?;
    let peak = field
        .state()
        .peak_density_estimate(plane)
        .max(f64::MIN_POSITIVE);
    let mut mu_r = Vec::with_capacity(WINDOW_WIDTH);
    let mut mu_l = Vec::with_capacity(WINDOW_WIDTH);
    let mut phase_overrange = 0;
    let mut port = |x: f64, right: bool| -> f64 {
        let (density, velocity) = field.density_and_velocity(x, plane);
        let phi = match velocity {
            Some(v) => model.zeta * v / field.light_speed() + model.phi0,
            None => model.phi0,
        };
        if phi.abs() >= std::f64::consts::FRAC_PI_2 && density > 1e-6 * peak {
            phase_overrange += 1;
        }
        let modulation = if right { 1.0 + phi.sin() } else { 1.0 - phi.sin() };
        density * modulation
    };
    for &x in &positions_r {
        mu_r.push(port(x, true));
    }
    for &x in &positions_l {
        mu_l.push(port(x, false));
    }
    Ok(WindowMeans { mu_r, mu_l, positions_r, positions_l, phase_overrange })
}

/// The two detector images produced by one synthesis run.
#[derive(Debug, Clone)]
pub struct SynthesizedPair {
    pub r: DetectorImage,
    pub l: DetectorImage,
    pub phase_overrange: usize,
}

/// Draw Poisson photon counts for both ports.
///
/// Expected counts are scaled so the combined window total equals
/// `photon_budget`; the draw is deterministic given `rng_seed`.
pub fn synthesize_images(
    field: &VelocityField,
    plane: Plane,
    model: &CouplingModel,
    geometry: &SensorGeometry,
    r_center: f64,
    l_center: f64,
    photon_budget: f64,
    rng_seed: u64,
) -> Result<SynthesizedPair, WeakMeasError> {
    if !(photon_budget.is_finite() && photon_budget > 0.0) {
        return Err(WeakMeasError::InvalidBudget(photon_budget));
    }
    let means = synthesize_means(field, plane, model, geometry, r_center, l_center)?;
    let total: f64 = means.mu_r.iter().chain(means.mu_l.iter()).sum();
    let scale = photon_budget / total;
    let mut rng = ChaCha12Rng::seed_from_u64(rng_seed);
    let mut draw = |mu: &[f64]| -> Vec<u64> {
        mu.iter()
            .map(|&m| {
                let lambda = m * scale;
                if lambda <= 0.0 {
                    0
                } else {
                    Poisson::new(lambda).expect("lambda is positive").sample(&mut rng) as u64
                }
            })
            .collect()
    };
    let counts_r = draw(&means.mu_r);
    let counts_l = draw(&means.mu_l);
    let image = |counts: Vec<u64>, center: f64| DetectorImage {
        counts,
        pixel_pitch_mm: geometry.pixel_pitch_mm,
        magnification_beta: geometry.beta,
        center_offset: center,
        plane_z: plane.z(),
        seed: rng_seed,
    };
    Ok(SynthesizedPair {
        r: image(counts_r, r_center),
        l: image(counts_l, l_center),
        phase_overrange: means.phase_overrange,
    })
}

/// Expected density-only image of a state on a raw sensor strip, used for the
/// center-calibration frames. Strip pixel p sits at x = (p - midline) * pitch
/// / beta, with `midline` the sensor coordinate of x = 0.
pub fn synthesize_density_strip(
    field: &VelocityField,
    plane: Plane,
    geometry: &SensorGeometry,
    midline: f64,
    strip_len: usize,
    photons: f64,
    rng: Option<&mut ChaCha12Rng>,
) -> Vec<f64> {
    let width = geometry.pixel_width_m();
    let mut mu: Vec<f64> = (0..strip_len)
        .map(|p| field.density((p as f64 - midline) * width, plane))
        .collect();
    let total: f64 = mu.iter().sum();
    let scale = photons / total;
    for m in mu.iter_mut() {
        *m *= scale;
    }
    match rng {
        None => mu,
        Some(rng) => mu
            .into_iter()
            .map(|m| {
                if m <= 0.0 {
                    0.0
                } else {
                    Poisson::new(m).expect("positive mean").sample(rng)
                }
            })
            .collect(),
    }
}
