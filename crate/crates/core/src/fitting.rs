//! Log-log regression utilities: decay-exponent fits with a noise floor,
//! and a binned quantile fit for polynomial growth envelopes.

use crate::error::{CoreError, Result};
use serde::{Deserialize, Serialize};

/// A fitted power-law exponent with residual diagnostics.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DecayFit {
    /// Slope of log |W| per log a; directly the Hölder-scale exponent.
    pub slope: f64,
    pub intercept: f64,
    pub residual_rms: f64,
    pub samples_used: usize,
    /// log10 span of the abscissa actually fitted.
    pub window_decades: f64,
    pub success: bool,
    /// Set when the slope was truncated at the rapid-decay cutoff.
    pub clamped_at_cutoff: bool,
}

#[derive(Debug, Clone, Copy)]
pub struct FitOptions {
    /// Values at or below 10x this floor are discarded before fitting.
    pub noise_floor: f64,
    pub min_samples: usize,
    pub min_decades: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            noise_floor: 0.0,
            min_samples: 8,
            min_decades: 1.0,
        }
    }
}

impl FitOptions {
    /// Floor tied to the double-precision noise of a transform whose largest
    /// magnitude is `max_abs`.
    pub fn for_field_max(max_abs: f64) -> Self {
        FitOptions {
            noise_floor: max_abs * 1e-13,
            ..Default::default()
        }
    }
}

/// Ordinary least squares of y against x.
pub fn ols(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rms = (xs
        .iter()
        .zip(ys)
        .map(|(x, y)| {
            let r = y - (intercept + slope * x);
            r * r
        })
        .sum::<f64>()
        / n)
        .sqrt();
    (slope, intercept, rms)
}

/// Least-squares slope of log|W| against log a over the samples above the
/// noise floor.
pub fn fit_decay(samples: &[(f64, f64)], opts: &FitOptions) -> Result<DecayFit> {
    let cut = 10.0 * opts.noise_floor;
    let kept: Vec<(f64, f64)> = samples
        .iter()
        .filter(|&&(a, w)| a > 0.0 && w > cut && w.is_finite())
        .copied()
        .collect();
    if kept.is_empty() && samples.iter().all(|&(_, w)| w == 0.0) {
        return Err(CoreError::DegenerateSamples(
            "all samples are exactly zero".into(),
        ));
    }
    if kept.len() < opts.min_samples {
        return Err(CoreError::InsufficientSamples {
            have: kept.len(),
            need: opts.min_samples,
        });
    }
    let xs: Vec<f64> = kept.iter().map(|&(a, _)| a.ln()).collect();
    let ys: Vec<f64> = kept.iter().map(|&(_, w)| w.ln()).collect();
    let lo = xs.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let window_decades = (hi - lo) / std::f64::consts::LN_10;
    if window_decades < opts.min_decades {
        return Err(CoreError::DegenerateSamples(format!(
            "fit window spans {window_decades:.2} decades, need {:.2}",
            opts.min_decades
        )));
    }
    let (slope, intercept, residual_rms) = ols(&xs, &ys);
    Ok(DecayFit {
        slope,
        intercept,
        residual_rms,
        samples_used: kept.len(),
        window_decades,
        success: true,
        clamped_at_cutoff: false,
    })
}

/// Binned quantile regression: per-bin upper quantile of y over x-bins, then
/// OLS through the bin envelope. Robust to the bulk of small values when
/// fitting growth bounds.
pub fn quantile_envelope_fit(
    points: &[(f64, f64)],
    quantile: f64,
    bins: usize,
) -> Result<(f64, f64)> {
    if points.len() < bins * 2 {
        return Err(CoreError::InsufficientSamples {
            have: points.len(),
            need: bins * 2,
        });
    }
    let lo = points.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let hi = points.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
    if !(hi > lo) {
        return Err(CoreError::DegenerateSamples(
            "growth fit abscissa is constant".into(),
        ));
    }
    let mut buckets: Vec<Vec<f64>> = vec![Vec::new(); bins];
    for &(x, y) in points {
        let idx = (((x - lo) / (hi - lo)) * bins as f64).min(bins as f64 - 1.0) as usize;
        buckets[idx].push(y);
    }
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (i, mut bucket) in buckets.into_iter().enumerate() {
        if bucket.len() < 3 {
            continue;
        }
        bucket.sort_by(f64::total_cmp);
        let pos = ((bucket.len() - 1) as f64 * quantile).round() as usize;
        xs.push(lo + (hi - lo) * (i as f64 + 0.5) / bins as f64);
        ys.push(bucket[pos]);
    }
    if xs.len() < 3 {
        return Err(CoreError::InsufficientSamples {
            have: xs.len(),
            need: 3,
        });
    }
    let (slope, intercept, _) = ols(&xs, &ys);
    Ok((slope, intercept))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_power_law_is_recovered() {
        let samples: Vec<(f64, f64)> = (0..24)
            .map(|i| {
                let a = 1e-3 * 1.5f64.powi(i);
                (a, 2.7 * a.powf(0.5))
            })
            .collect();
        let fit = fit_decay(&samples, &FitOptions::default()).unwrap();
        assert!((fit.slope - 0.5).abs() < 1e-10);
        assert!(fit.residual_rms < 1e-10);
    }

    #[test]
    fn flat_samples_have_zero_slope() {
        let samples: Vec<(f64, f64)> = (0..16)
            .map(|i| (1e-2 * 2f64.powi(i / 2) * 1.3f64.powi(i % 2), 0.8))
            .collect();
        let fit = fit_decay(&samples, &FitOptions::default()).unwrap();
        assert!(fit.slope.abs() < 1e-12);
    }

    #[test]
    fn all_zero_samples_are_degenerate() {
        let samples: Vec<(f64, f64)> = (0..16).map(|i| (1e-2 * 2f64.powi(i), 0.0)).collect();
        assert!(matches!(
            fit_decay(&samples, &FitOptions::default()),
            Err(CoreError::DegenerateSamples(_))
        ));
    }

    #[test]
    fn too_few_samples_error() {
        let samples = vec![(0.1, 1.0), (0.2, 2.0)];
        assert!(matches!(
            fit_decay(&samples, &FitOptions::default()),
            Err(CoreError::InsufficientSamples { .. })
        ));
    }

    #[test]
    fn floor_masks_noise() {
        // power law down to a floor, then flat noise; fit must ignore the tail
        let mut samples = Vec::new();
        for i in 0..40 {
            let a = 1e-4 * 1.4f64.powi(i);
            let w = (a.powf(2.0)).max(1e-7);
            samples.push((a, w));
        }
        let opts = FitOptions {
            noise_floor: 1e-7,
            ..Default::default()
        };
        let fit = fit_decay(&samples, &opts).unwrap();
        assert!((fit.slope - 2.0).abs() < 1e-6, "slope {}", fit.slope);
    }

    #[test]
    fn quantile_fit_tracks_envelope() {
        // envelope y = 3x + 1 with a bulk far below it
        let mut pts = Vec::new();
        for i in 0..400 {
            let x = i as f64 / 100.0;
            pts.push((x, 3.0 * x + 1.0));
            for j in 0..4 {
                pts.push((x, 3.0 * x - 2.0 - j as f64));
            }
        }
        let (k, c) = quantile_envelope_fit(&pts, 0.95, 10).unwrap();
        assert!((k - 3.0).abs() < 0.1, "slope {k}");
        assert!(c > 0.0, "intercept {c}");
    }
}
