//! Weak-measurement apparatus emulation: the forward detector model and the
//! inverse pipeline recovering per-pixel weak momentum values.
//!
//! The forward model couples the transverse momentum ratio to a polarization
//! phase phi = zeta * <k_x>_w / k + phi_0 and splits the beam into right- and
//! left-circular intensity images I_R ~ rho (1 + sin phi), I_L ~ rho (1 - sin
//! phi). The inverse pipeline fits Gaussian centers, windows 321 pixels around
//! them, normalizes each window by its own total, applies the arcsin formula
//! per pixel, and interpolates with a Gaussian kernel.

mod calibrate;
mod gaussfit;
mod synth;

pub use calibrate::{
    calibrate_zeta, default_tilt_angles, synthesize_sweep, ArcsinBranchMode, CalibrationFit,
    CalibrationSweep, SweepNoise,
};
pub use gaussfit::{fit_gaussian_center, GaussianFit};
pub use synth::{
    synthesize_density_strip, synthesize_images, synthesize_means, SensorGeometry,
    SynthesizedPair, WindowMeans,
};

use thiserror::Error;

use crate::positive;

/// Half-width of the detection window; 321 pixels, indices -160..=160.
pub const WINDOW_HALF: i64 = 160;
pub const WINDOW_WIDTH: usize = 2 * WINDOW_HALF as usize + 1;

/// ICCD pixel pitch in mm.
pub const PIXEL_PITCH_MM: f64 = 0.013;

/// Raw-count floor below which a pixel is marked missing instead of noisy.
pub const DEFAULT_COUNT_FLOOR: f64 = 10.0;

#[derive(Debug, Error, PartialEq)]
pub enum WeakMeasError {
    #[error("coupling strength zeta must be positive, got {0}")]
    InvalidZeta(f64),
    #[error("magnification beta must be positive, got {0}")]
    InvalidBeta(f64),
    #[error("photon budget must be positive, got {0}")]
    InvalidBudget(f64),
    #[error("window [{lo}, {hi}] extends beyond the sensor of {len} pixels")]
    WindowOutOfBounds { lo: i64, hi: i64, len: usize },
    #[error("detector image must have {expected} pixels, got {got}")]
    BadWindowWidth { expected: usize, got: usize },
    #[error("gaussian fit failed: residual norm {residual:e} exceeds half the signal norm {signal:e}")]
    FitFailure { residual: f64, signal: f64 },
    #[error("gaussian fit needs a nonempty image with positive signal")]
    DegenerateImage,
    #[error("no non-missing neighbor within 5 kernel widths of x={0}")]
    NoNeighbor(f64),
    #[error("calibration sweep needs at least 3 points, got {0}")]
    SweepTooShort(usize),
    #[error("calibration sweep angles must be strictly increasing")]
    SweepNotIncreasing,
    #[error("degenerate calibration fit: angle spread is zero")]
    FitDegenerate,
}

/// Dimensionless coupling strength and residual phase of the weak coupling.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CouplingModel {
    pub zeta: f64,
    pub phi0: f64,
}

impl CouplingModel {
    pub fn new(zeta: f64, phi0: f64) -> Result<Self, WeakMeasError> {
        if !positive(zeta) {
            return Err(WeakMeasError::InvalidZeta(zeta));
        }
        Ok(CouplingModel { zeta, phi0 })
    }
}

/// phi(k_x) = zeta * <k_x>_w / k + phi_0.
pub fn phase_of_momentum(k_ratio: f64, model: &CouplingModel) -> f64 {
    model.zeta * k_ratio + model.phi0
}

/// Per-pixel photon counts for one circular-polarization port at one plane.
///
/// `center_offset` is the fitted fractional-pixel center (R_c or L_c) in
/// absolute sensor coordinates; only its fractional part enters the
/// pixel-to-position mapping.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectorImage {
    pub counts: Vec<u64>,
    pub pixel_pitch_mm: f64,
    pub magnification_beta: f64,
    pub center_offset: f64,
    pub plane_z: f64,
    pub seed: u64,
}

impl DetectorImage {
    pub fn validate(&self) -> Result<(), WeakMeasError> {
        if self.counts.len() != WINDOW_WIDTH {
            return Err(WeakMeasError::BadWindowWidth {
                expected: WINDOW_WIDTH,
                got: self.counts.len(),
            });
        }
        if !positive(self.pixel_pitch_mm) {
            return Err(WeakMeasError::InvalidBeta(self.pixel_pitch_mm));
        }
        if !positive(self.magnification_beta) {
            return Err(WeakMeasError::InvalidBeta(self.magnification_beta));
        }
        Ok(())
    }
}

/// Position in metres of window index i (-160..=160):
/// x = (center_offset - [center_offset] + i) * pitch / beta.
pub fn pixel_to_position(image: &DetectorImage, index: i64) -> Result<f64, WeakMeasError> {
    position_from_center(
        image.center_offset,
        index,
        image.pixel_pitch_mm,
        image.magnification_beta,
    )
}

/// Same mapping from a bare fractional center.
pub fn position_from_center(
    center: f64,
    index: i64,
    pixel_pitch_mm: f64,
    beta: f64,
) -> Result<f64, WeakMeasError> {
    if !positive(beta) {
        return Err(WeakMeasError::InvalidBeta(beta));
    }
    let frac = center - center.floor();
    Ok((frac + index as f64) * pixel_pitch_mm * 1e-3 / beta)
}

/// All 321 window positions in metres.
pub fn window_positions(center: f64, pixel_pitch_mm: f64, beta: f64) -> Result<Vec<f64>, WeakMeasError> {
    (-WINDOW_HALF..=WINDOW_HALF)
        .map(|i| position_from_center(center, i, pixel_pitch_mm, beta))
        .collect()
}

/// Windowed and per-port-normalized intensity pair, plus the raw totals used
/// for the count floor.
#[derive(Debug, Clone)]
pub struct NormalizedPair {
    pub n_r: Vec<f64>,
    pub n_l: Vec<f64>,
    /// raw (unnormalized) counts per pixel, summed over both ports
    pub raw_total: Vec<f64>,
    pub r_center: f64,
    pub l_center: f64,
}

/// Cut the 321-pixel windows around [R_c] and [L_c] out of two sensor strips
/// and divide each window by its own total counts.
pub fn window_and_normalize(
    r_strip: &[f64],
    l_strip: &[f64],
    r_center: f64,
    l_center: f64,
) -> Result<NormalizedPair, WeakMeasError> {
    let r_window = cut_window(r_strip, r_center)?;
    let l_window = cut_window(l_strip, l_center)?;
    let raw_total: Vec<f64> = r_window
        .iter()
        .zip(&l_window)
        .map(|(a, b)| a + b)
        .collect();
    Ok(NormalizedPair {
        n_r: normalize(&r_window),
        n_l: normalize(&l_window),
        raw_total,
        r_center,
        l_center,
    })
}

/// Normalized pair straight from two already-windowed detector images.
pub fn normalize_images(
    r: &DetectorImage,
    l: &DetectorImage,
) -> Result<NormalizedPair, WeakMeasError> {
    r.validate()?;
    l.validate()?;
    let r_window: Vec<f64> = r.counts.iter().map(|&c| c as f64).collect();
    let l_window: Vec<f64> = l.counts.iter().map(|&c| c as f64).collect();
    let raw_total = r_window.iter().zip(&l_window).map(|(a, b)| a + b).collect();
    Ok(NormalizedPair {
        n_r: normalize(&r_window),
        n_l: normalize(&l_window),
        raw_total,
        r_center: r.center_offset,
        l_center: l.center_offset,
    })
}

fn cut_window(strip: &[f64], center: f64) -> Result<Vec<f64>, WeakMeasError> {
    let base = center.floor() as i64;
    let lo = base - WINDOW_HALF;
    let hi = base + WINDOW_HALF;
    if lo < 0 || hi >= strip.len() as i64 {
        return Err(WeakMeasError::WindowOutOfBounds { lo, hi, len: strip.len() });
    }
    Ok(strip[lo as usize..=hi as usize].to_vec())
}

fn normalize(window: &[f64]) -> Vec<f64> {
    let total: f64 = window.iter().sum();
    window.iter().map(|&v| v / total).collect()
}

/// Per-pixel weak momentum ratios recovered from one normalized pair.
#[derive(Debug, Clone)]
pub struct MomentumProfile {
    /// <k_x>_w / k per window pixel; `None` marks pixels below the count floor
    pub k_ratio: Vec<Option<f64>>,
    /// pixels whose arcsin argument had to be clipped to +-1
    pub clipped: Vec<bool>,
    pub clipped_count: usize,
}

/// Appendix-style per-pixel inversion:
/// k_ratio_i = arcsin((n_R - n_L) / (n_R + n_L)) / zeta - phi_0 / zeta.
///
/// Out-of-range arcsin arguments are clipped to +-1 and flagged; pixels whose
/// raw counts fall below `count_floor` are marked missing.
pub fn extract_weak_momentum(
    pair: &NormalizedPair,
    model: &CouplingModel,
    count_floor: f64,
) -> MomentumProfile {
    let mut k_ratio = Vec::with_capacity(pair.n_r.len());
    let mut clipped = Vec::with_capacity(pair.n_r.len());
    let mut clipped_count = 0;
    for i in 0..pair.n_r.len() {
        if pair.raw_total[i] < count_floor {
            k_ratio.push(None);
            clipped.push(false);
            continue;
        }
        let num = pair.n_r[i] - pair.n_l[i];
        let den = pair.n_r[i] + pair.n_l[i];
        let arg = num / den;
        let was_clipped = arg.abs() > 1.0;
        let value = (arg.clamp(-1.0, 1.0).asin() - model.phi0) / model.zeta;
        if was_clipped {
            clipped_count += 1;
        }
        k_ratio.push(Some(value));
        clipped.push(was_clipped);
    }
    MomentumProfile { k_ratio, clipped, clipped_count }
}

/// Nadaraya-Watson regression with a Gaussian kernel over scattered momentum
/// samples. A query landing exactly on a sample returns that sample, so the
/// estimator interpolates its knots.
#[derive(Debug, Clone)]
pub struct KernelInterpolator {
    xs: Vec<f64>,
    ys: Vec<f64>,
    bandwidth: f64,
}

impl KernelInterpolator {
    pub fn new(xs: Vec<f64>, ys: Vec<f64>, bandwidth: f64) -> Self {
        assert_eq!(xs.len(), ys.len());
        assert!(bandwidth > 0.0);
        KernelInterpolator { xs, ys, bandwidth }
    }

    /// Build from window positions and a momentum profile, skipping missing
    /// pixels. Bandwidth defaults to one pixel pitch over beta.
    pub fn from_profile(
        positions: &[f64],
        profile: &MomentumProfile,
        bandwidth: f64,
    ) -> Self {
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for (i, value) in profile.k_ratio.iter().enumerate() {
            if let Some(v) = value {
                xs.push(positions[i]);
                ys.push(*v);
            }
        }
        KernelInterpolator::new(xs, ys, bandwidth)
    }

    pub fn len(&self) -> usize {
        self.xs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }

    pub fn estimate(&self, x: f64) -> Result<f64, WeakMeasError> {
        let mut num = 0.0;
        let mut den = 0.0;
        let mut any_neighbor = false;
        for (xi, yi) in self.xs.iter().zip(&self.ys) {
            let distance = (x - xi).abs();
            if distance < 1e-9 * self.bandwidth {
                return Ok(*yi);
            }
            if distance <= 5.0 * self.bandwidth {
                any_neighbor = true;
            }
            let t = distance / self.bandwidth;
            let weight = (-0.5 * t * t).exp();
            num += weight * yi;
            den += weight;
        }
        if !any_neighbor || den == 0.0 {
            return Err(WeakMeasError::NoNeighbor(x));
        }
        Ok(num / den)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn model() -> CouplingModel {
        CouplingModel::new(336.0, 0.0).unwrap()
    }

    #[test]
    fn coupling_model_validation() {
        assert!(CouplingModel::new(0.0, 0.0).is_err());
        assert!(CouplingModel::new(-1.0, 0.0).is_err());
        assert!(CouplingModel::new(336.0, 0.1).is_ok());
    }

    #[test]
    fn phase_of_momentum_is_affine() {
        let m = model();
        assert_eq!(phase_of_momentum(0.0, &m), 0.0);
        assert_abs_diff_eq!(phase_of_momentum(1e-3, &m), 0.336, epsilon = 1e-15);
        let offset = CouplingModel::new(336.0, 0.1).unwrap();
        assert_abs_diff_eq!(phase_of_momentum(0.0, &offset), 0.1, epsilon = 1e-15);
    }

    fn image_with(center: f64, beta: f64) -> DetectorImage {
        DetectorImage {
            counts: vec![0; WINDOW_WIDTH],
            pixel_pitch_mm: PIXEL_PITCH_MM,
            magnification_beta: beta,
            center_offset: center,
            plane_z: 1.492,
            seed: 0,
        }
    }

    #[test]
    fn pixel_to_position_examples() {
        let integral = image_with(200.0, 1.0);
        assert_eq!(pixel_to_position(&integral, 0).unwrap(), 0.0);
        let half = image_with(200.5, 1.0);
        assert_abs_diff_eq!(
            pixel_to_position(&half, 100).unwrap(),
            1.3065e-3,
            epsilon = 1e-12
        );
        let magnified = image_with(200.5, 2.0);
        assert_abs_diff_eq!(
            pixel_to_position(&magnified, 100).unwrap(),
            0.65325e-3,
            epsilon = 1e-12
        );
    }

    #[test]
    fn pixel_to_position_rejects_nonpositive_beta() {
        let image = image_with(200.0, 0.0);
        assert!(pixel_to_position(&image, 0).is_err());
    }

    #[test]
    fn pixel_to_position_is_affine_and_scales_inversely_with_beta() {
        let image = image_with(321.7, 1.3);
        let at = |i| pixel_to_position(&image, i).unwrap();
        let step = at(1) - at(0);
        for i in -160..160 {
            assert_abs_diff_eq!(at(i + 1) - at(i), step, epsilon = 1e-18);
        }
        let doubled = image_with(321.7, 2.6);
        for i in [-160, -3, 0, 7, 160] {
            assert_abs_diff_eq!(
                pixel_to_position(&doubled, i).unwrap(),
                at(i) / 2.0,
                epsilon = 1e-18
            );
        }
    }

    #[test]
    fn windowing_follows_the_midpoint_rule() {
        // x1 = 10.2, x2 = 10.8 -> R_c = 10.5, window pixels [10-160, 10+160]
        let r_c = (10.2 + 10.8) / 2.0;
        assert_eq!(r_c, 10.5);
        let mut strip = vec![0.0; 400];
        // mark the expected window edges
        strip[(10 - 160 + 200) as usize] = 1.0;
        let shifted: Vec<f64> = strip.clone();
        // place window in a strip long enough on both sides: use offset centers
        let pair = window_and_normalize(&shifted, &shifted, 200.0 + r_c, 200.0 + r_c).unwrap();
        assert_eq!(pair.n_r.len(), WINDOW_WIDTH);
        // the marked pixel sits at window index 0
        assert_eq!(pair.n_r[0], 1.0);
    }

    #[test]
    fn windows_beyond_the_sensor_are_rejected() {
        let strip = vec![1.0; 300];
        assert!(matches!(
            window_and_normalize(&strip, &strip, 100.0, 150.0),
            Err(WeakMeasError::WindowOutOfBounds { .. })
        ));
    }

    #[test]
    fn identical_ports_normalize_identically_and_sum_to_one() {
        let strip: Vec<f64> = (0..700)
            .map(|i| (-((i as f64 - 350.0) / 40.0).powi(2)).exp() * 500.0)
            .collect();
        let pair = window_and_normalize(&strip, &strip, 350.3, 350.3).unwrap();
        assert_eq!(pair.n_r, pair.n_l);
        let sum_r: f64 = pair.n_r.iter().sum();
        let sum_l: f64 = pair.n_l.iter().sum();
        assert_abs_diff_eq!(sum_r, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(sum_l, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn balanced_pixels_extract_zero_momentum() {
        let n = vec![1.0 / WINDOW_WIDTH as f64; WINDOW_WIDTH];
        let pair = NormalizedPair {
            n_r: n.clone(),
            n_l: n,
            raw_total: vec![100.0; WINDOW_WIDTH],
            r_center: 0.0,
            l_center: 0.0,
        };
        let profile = extract_weak_momentum(&pair, &model(), DEFAULT_COUNT_FLOOR);
        for v in profile.k_ratio.iter().flatten() {
            assert_abs_diff_eq!(*v, 0.0, epsilon = 1e-15);
        }
        assert_eq!(profile.clipped_count, 0);
    }

    #[test]
    fn one_sided_pixel_saturates_the_arcsin() {
        let mut n_r = vec![1.0 / WINDOW_WIDTH as f64; WINDOW_WIDTH];
        let mut n_l = n_r.clone();
        n_r[5] = 2.0 / WINDOW_WIDTH as f64;
        n_l[5] = 0.0;
        let pair = NormalizedPair {
            n_r,
            n_l,
            raw_total: vec![100.0; WINDOW_WIDTH],
            r_center: 0.0,
            l_center: 0.0,
        };
        let profile = extract_weak_momentum(&pair, &model(), DEFAULT_COUNT_FLOOR);
        let v = profile.k_ratio[5].unwrap();
        assert_abs_diff_eq!(v, std::f64::consts::FRAC_PI_2 / 336.0, epsilon = 1e-12);
        assert_abs_diff_eq!(v, 4.67e-3, epsilon = 1e-5);
    }

    #[test]
    fn low_count_pixels_are_missing() {
        let n = vec![1.0 / WINDOW_WIDTH as f64; WINDOW_WIDTH];
        let mut raw = vec![100.0; WINDOW_WIDTH];
        raw[7] = 3.0;
        let pair = NormalizedPair {
            n_r: n.clone(),
            n_l: n,
            raw_total: raw,
            r_center: 0.0,
            l_center: 0.0,
        };
        let profile = extract_weak_momentum(&pair, &model(), DEFAULT_COUNT_FLOOR);
        assert!(profile.k_ratio[7].is_none());
        assert!(profile.k_ratio[6].is_some());
    }

    #[test]
    fn interpolator_returns_knot_values_exactly() {
        let interp = KernelInterpolator::new(vec![0.0, 1.0, 2.0], vec![5.0, 7.0, 9.0], 1.0);
        assert_eq!(interp.estimate(1.0).unwrap(), 7.0);
    }

    #[test]
    fn interpolator_tracks_a_linear_ramp() {
        let xs: Vec<f64> = (0..200).map(|i| i as f64 * 0.01).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 * x + 0.2).collect();
        let interp = KernelInterpolator::new(xs, ys, 0.01);
        for q in [0.505, 0.755, 1.001, 1.503] {
            let expected = 3.0 * q + 0.2;
            let got = interp.estimate(q).unwrap();
            assert!((got - expected).abs() < 1e-3, "ramp off at {q}: {got} vs {expected}");
        }
    }

    #[test]
    fn interpolator_with_no_neighbors_errors() {
        let interp = KernelInterpolator::new(vec![0.0], vec![1.0], 0.01);
        assert!(matches!(
            interp.estimate(1.0),
            Err(WeakMeasError::NoNeighbor(_))
        ));
    }
}
