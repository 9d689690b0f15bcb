//! Least-squares fit of a single Gaussian lobe to pixel data, used to locate
//! beam centers at fractional-pixel precision.

use super::WeakMeasError;

/// Fitted parameters of A * exp(-(i - c)^2 / s^2) + b over pixel indices.
#[derive(Debug, Clone, Copy)]
pub struct GaussianFit {
    pub center: f64,
    pub amplitude: f64,
    /// 1/e half-width in pixels
    pub width: f64,
    pub offset: f64,
    pub residual_norm: f64,
    pub iterations: usize,
}

/// Fit A * exp(-(i - c)^2 / s^2) + b to `values` by Levenberg-Marquardt and
/// return the fractional-pixel center (index units, origin at element 0).
///
/// Fails when the residual norm exceeds 50% of the signal norm.
pub fn fit_gaussian_center(values: &[f64]) -> Result<GaussianFit, WeakMeasError> {
    let fit = fit_gaussian(values)?;
    let signal_norm = values.iter().map(|v| v * v).sum::<f64>().sqrt();
    if fit.residual_norm > 0.5 * signal_norm {
        return Err(WeakMeasError::FitFailure {
            residual: fit.residual_norm,
            signal: signal_norm,
        });
    }
    Ok(fit)
}

fn initial_guess(values: &[f64]) -> Result<[f64; 4], WeakMeasError> {
    let n = values.len();
    if n < 5 {
        return Err(WeakMeasError::DegenerateImage);
    }
    let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !(max > min) || !max.is_finite() {
        return Err(WeakMeasError::DegenerateImage);
    }
    let mut mass = 0.0;
    let mut first = 0.0;
    for (i, &v) in values.iter().enumerate() {
        let w = (v - min).max(0.0);
        mass += w;
        first += w * i as f64;
    }
    if mass <= 0.0 {
        return Err(WeakMeasError::DegenerateImage);
    }
    let center = first / mass;
    let mut second = 0.0;
    for (i, &v) in values.iter().enumerate() {
        let w = (v - min).max(0.0);
        second += w * (i as f64 - center).powi(2);
    }
    // variance of the profile is s^2 / 2
    let width = (2.0 * second / mass).sqrt().max(0.5);
    Ok([max - min, center, width, min])
}

fn residuals(values: &[f64], p: &[f64; 4]) -> Vec<f64> {
    let [a, c, s, b] = *p;
    values
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let u = (i as f64 - c) / s;
            a * (-u * u).exp() + b - v
        })
        .collect()
}

fn sum_sq(r: &[f64]) -> f64 {
    r.iter().map(|v| v * v).sum()
}

fn fit_gaussian(values: &[f64]) -> Result<GaussianFit, WeakMeasError> {
    let mut p = initial_guess(values)?;
    let mut lambda = 1e-3;
    let mut cost = sum_sq(&residuals(values, &p));
    let mut iterations = 0;
    for iter in 0..200 {
        iterations = iter + 1;
        // normal equations J^T J + lambda diag, J^T r for the 4 parameters
        let [a, c, s, b] = p;
        let mut jtj = [[0.0f64; 4]; 4];
        let mut jtr = [0.0f64; 4];
        for (i, &v) in values.iter().enumerate() {
            let u = (i as f64 - c) / s;
            let e = (-u * u).exp();
            let model = a * e + b;
            let r = model - v;
            let grad = [
                e,
                a * e * 2.0 * u / s,
                a * e * 2.0 * u * u / s,
                1.0,
            ];
            for j in 0..4 {
                jtr[j] += grad[j] * r;
                for k in 0..4 {
                    jtj[j][k] += grad[j] * grad[k];
                }
            }
        }
        let mut damped = jtj;
        for j in 0..4 {
            damped[j][j] += lambda * (jtj[j][j].max(1e-12));
        }
        let Some(step) = solve4(&damped, &jtr) else {
            lambda *= 10.0;
            continue;
        };
        let trial = [
            p[0] - step[0],
            p[1] - step[1],
            (p[2] - step[2]).abs().max(1e-6),
            p[3] - step[3],
        ];
        let trial_cost = sum_sq(&residuals(values, &trial));
        if trial_cost < cost {
            let improvement = (cost - trial_cost) / cost.max(1e-300);
            p = trial;
            cost = trial_cost;
            lambda = (lambda * 0.1).max(1e-12);
            if improvement < 1e-14 {
                break;
            }
        } else {
            lambda *= 10.0;
            if lambda > 1e12 {
                break;
            }
        }
    }
    Ok(GaussianFit {
        center: p[1],
        amplitude: p[0],
        width: p[2],
        offset: p[3],
        residual_norm: cost.sqrt(),
        iterations,
    })
}

/// Gaussian elimination with partial pivoting for the 4x4 normal equations.
fn solve4(m: &[[f64; 4]; 4], rhs: &[f64; 4]) -> Option<[f64; 4]> {
    let mut a = *m;
    let mut b = *rhs;
    for col in 0..4 {
        let pivot = (col..4).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[pivot][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in (col + 1)..4 {
            let f = a[row][col] / a[col][col];
            for k in col..4 {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = [0.0; 4];
    for col in (0..4).rev() {
        let mut v = b[col];
        for k in (col + 1)..4 {
            v -= a[col][k] * x[k];
        }
        x[col] = v / a[col][col];
    }
    Some(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_distr::{Distribution, Poisson};

    fn synthetic(center: f64, width: f64, amplitude: f64, offset: f64, n: usize) -> Vec<f64> {
        (0..n)
            .map(|i| {
                let u = (i as f64 - center) / width;
                amplitude * (-u * u).exp() + offset
            })
            .collect()
    }

    #[test]
    fn recovers_a_noiseless_fractional_center() {
        let values = synthetic(12.3, 4.0, 900.0, 10.0, 64);
        let fit = fit_gaussian_center(&values).unwrap();
        assert_abs_diff_eq!(fit.center, 12.3, epsilon = 0.01);
        assert_abs_diff_eq!(fit.width, 4.0, epsilon = 0.01);
    }

    #[test]
    fn symmetric_image_fits_center_zero() {
        // values indexed -32..=32, peak exactly at index 0
        let values = synthetic(32.0, 6.0, 500.0, 0.0, 65);
        let fit = fit_gaussian_center(&values).unwrap();
        assert_abs_diff_eq!(fit.center - 32.0, 0.0, epsilon = 1e-6);
    }

    #[test]
    fn poisson_noise_keeps_the_center_within_a_tenth_of_a_pixel() {
        let truth = 40.7;
        let means = synthetic(truth, 8.0, 1e6 / (8.0 * std::f64::consts::PI.sqrt()), 0.0, 101);
        for seed in 0..5u64 {
            let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(seed);
            let noisy: Vec<f64> = means
                .iter()
                .map(|&mu| {
                    if mu <= 0.0 {
                        0.0
                    } else {
                        Poisson::new(mu).unwrap().sample(&mut rng)
                    }
                })
                .collect();
            let fit = fit_gaussian_center(&noisy).unwrap();
            assert!(
                (fit.center - truth).abs() < 0.1,
                "seed {seed}: center {} vs {truth}",
                fit.center
            );
        }
    }

    #[test]
    fn flat_or_tiny_images_are_rejected() {
        assert!(fit_gaussian_center(&[1.0, 1.0, 1.0, 1.0, 1.0, 1.0]).is_err());
        assert!(fit_gaussian_center(&[1.0, 2.0]).is_err());
    }

    #[test]
    fn non_gaussian_data_fails_the_residual_check() {
        // alternating values carry half their norm in the residual
        let values: Vec<f64> = (0..64).map(|i| if i % 2 == 0 { 100.0 } else { 0.0 }).collect();
        assert!(matches!(
            fit_gaussian_center(&values),
            Err(WeakMeasError::FitFailure { .. })
        ));
    }
}
