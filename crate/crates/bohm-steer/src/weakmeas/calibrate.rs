//! Coupling-strength calibration from a tilt sweep: per-angle intensity pairs
//! are converted to phases via the arcsin rule and fitted with a line
//! phi = zeta * theta_in + phi_0.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Poisson};

use super::{CouplingModel, WeakMeasError};

/// Tilt angles (rad) with the measured (I_R, I_L) intensity pairs.
#[derive(Debug, Clone)]
pub struct CalibrationSweep {
    pub tilt_angles: Vec<f64>,
    pub intensities: Vec<(f64, f64)>,
}

impl CalibrationSweep {
    pub fn new(tilt_angles: Vec<f64>, intensities: Vec<(f64, f64)>) -> Result<Self, WeakMeasError> {
        if tilt_angles.len() != intensities.len() || tilt_angles.len() < 3 {
            return Err(WeakMeasError::SweepTooShort(tilt_angles.len()));
        }
        if tilt_angles.windows(2).any(|w| w[1] <= w[0]) {
            return Err(WeakMeasError::SweepNotIncreasing);
        }
        Ok(CalibrationSweep { tilt_angles, intensities })
    }
}

/// How to handle the arcsin branch over sweeps whose phase leaves
/// (-pi/2, pi/2).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArcsinBranchMode {
    /// Assume phase continuity between adjacent tilt steps and unwrap the
    /// arcsin sequence before fitting. Works over the full sweep range.
    Unwrap,
    /// Fit the principal-branch values directly; only valid when the sweep is
    /// restricted to |phi| < pi/2.
    Principal,
}

/// Fitted coupling model with the least-squares standard errors.
#[derive(Debug, Clone, Copy)]
pub struct CalibrationFit {
    pub model: CouplingModel,
    pub zeta_stderr: f64,
    pub phi0_stderr: f64,
}

/// Optional shot noise for a synthetic sweep.
#[derive(Debug, Clone, Copy)]
pub struct SweepNoise {
    pub photons_per_point: f64,
    pub seed: u64,
}

/// Forward model of the tilt sweep: I_R = (1 + sin phi)/2, I_L = (1 - sin
/// phi)/2 per point, optionally with Poisson counting noise.
pub fn synthesize_sweep(
    zeta: f64,
    phi0: f64,
    tilt_angles: &[f64],
    noise: Option<SweepNoise>,
) -> CalibrationSweep {
    let mut rng = noise.map(|n| ChaCha12Rng::seed_from_u64(n.seed));
    let intensities = tilt_angles
        .iter()
        .map(|&theta| {
            let phi = zeta * theta + phi0;
            let i_r = 0.5 * (1.0 + phi.sin());
            let i_l = 0.5 * (1.0 - phi.sin());
            match (&mut rng, noise) {
                (Some(rng), Some(n)) => {
                    let draw = |mu: f64, rng: &mut ChaCha12Rng| {
                        if mu <= 0.0 {
                            0.0
                        } else {
                            Poisson::new(mu).expect("positive mean").sample(rng)
                        }
                    };
                    (
                        draw(i_r * n.photons_per_point, rng),
                        draw(i_l * n.photons_per_point, rng),
                    )
                }
                _ => (i_r, i_l),
            }
        })
        .collect();
    CalibrationSweep { tilt_angles: tilt_angles.to_vec(), intensities }
}

/// Default tilt range: -0.48 deg to 0.60 deg in 0.03 deg increments.
pub fn default_tilt_angles() -> Vec<f64> {
    (0..=36).map(|i| (-0.48 + 0.03 * i as f64).to_radians()).collect()
}

/// Recover (zeta, phi0) from a sweep by the arcsin rule and a straight-line
/// least-squares fit.
pub fn calibrate_zeta(
    sweep: &CalibrationSweep,
    mode: ArcsinBranchMode,
) -> Result<CalibrationFit, WeakMeasError> {
    if sweep.tilt_angles.len() < 3 {
        return Err(WeakMeasError::SweepTooShort(sweep.tilt_angles.len()));
    }
    let spread = sweep.tilt_angles.last().unwrap() - sweep.tilt_angles.first().unwrap();
    if spread <= 0.0 {
        return Err(WeakMeasError::FitDegenerate);
    }
    let principal: Vec<f64> = sweep
        .intensities
        .iter()
        .map(|&(i_r, i_l)| ((i_r - i_l) / (i_r + i_l)).clamp(-1.0, 1.0).asin())
        .collect();
    match mode {
        ArcsinBranchMode::Principal => fit_line(&sweep.tilt_angles, &principal),
        ArcsinBranchMode::Unwrap => {
            // two anchor choices; sin is invariant under phi -> pi - phi, so a
            // wrong anchor yields the reflected (negative-slope) solution
            let mut best: Option<(f64, CalibrationFit)> = None;
            for anchor in [principal[0], std::f64::consts::PI - principal[0]] {
                let phases = unwrap_phases(&principal, anchor);
                let fit = fit_line(&sweep.tilt_angles, &phases)?;
                if fit.model.zeta <= 0.0 {
                    continue;
                }
                let residual = residual_sq(&sweep.tilt_angles, &phases, &fit);
                let better = match &best {
                    None => true,
                    Some((r, _)) => residual < *r,
                };
                if better {
                    best = Some((residual, fit));
                }
            }
            let (_, mut fit) = best.ok_or(WeakMeasError::FitDegenerate)?;
            // fold the intercept into (-pi, pi]
            let two_pi = 2.0 * std::f64::consts::PI;
            let turns = (fit.model.phi0 / two_pi).round();
            fit.model.phi0 -= turns * two_pi;
            Ok(fit)
        }
    }
}

/// Reconstruct a continuous phase sequence from principal arcsin values: each
/// step picks the candidate (y + 2 pi n or pi - y + 2 pi n) closest to the
/// linear prediction from the previous two phases.
fn unwrap_phases(principal: &[f64], anchor: f64) -> Vec<f64> {
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut phases = Vec::with_capacity(principal.len());
    phases.push(anchor);
    for (j, &y) in principal.iter().enumerate().skip(1) {
        let prev = phases[j - 1];
        let predicted = if j >= 2 {
            2.0 * phases[j - 1] - phases[j - 2]
        } else {
            prev
        };
        let mut best = f64::INFINITY;
        let mut chosen = prev;
        for base in [y, std::f64::consts::PI - y] {
            let n = ((predicted - base) / two_pi).round();
            for dn in [-1.0, 0.0, 1.0] {
                let candidate = base + (n + dn) * two_pi;
                let distance = (candidate - predicted).abs();
                if distance < best {
                    best = distance;
                    chosen = candidate;
                }
            }
        }
        phases.push(chosen);
    }
    phases
}

fn fit_line(xs: &[f64], ys: &[f64]) -> Result<CalibrationFit, WeakMeasError> {
    let n = xs.len() as f64;
    let mean_x = xs.iter().sum::<f64>() / n;
    let mean_y = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mean_x).powi(2)).sum();
    if sxx <= 0.0 {
        return Err(WeakMeasError::FitDegenerate);
    }
    let sxy: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (x - mean_x) * (y - mean_y))
        .sum();
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let ss_res: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - (slope * x + intercept)).powi(2))
        .sum();
    let dof = (xs.len().saturating_sub(2)).max(1) as f64;
    let sigma_sq = ss_res / dof;
    let zeta_stderr = (sigma_sq / sxx).sqrt();
    let phi0_stderr = (sigma_sq * (1.0 / n + mean_x * mean_x / sxx)).sqrt();
    let model = CouplingModel { zeta: slope, phi0: intercept };
    Ok(CalibrationFit { model, zeta_stderr, phi0_stderr })
}

fn residual_sq(xs: &[f64], ys: &[f64], fit: &CalibrationFit) -> f64 {
    xs.iter()
        .zip(ys)
        .map(|(x, y)| (y - (fit.model.zeta * x + fit.model.phi0)).powi(2))
        .sum()
}
