//! Spectral Laplacian and Poisson machinery, the scale-transfer identity for
//! radial wavelets, and the numerical regularity-gain experiment on cusp
//! domains.

use crate::engine::{forward, EngineOptions, HalfSpaceField};
use crate::error::{CoreError, Result};
use crate::fitting::{fit_decay, ols, DecayFit, FitOptions};
use crate::geometry::{influence_region, well_separated, RegionMask, SampleLattice};
use crate::grid::{GridMeta, GridSignal, ScaleGrid};
use crate::microlocal::{classify_type, masked_delta_samples, tube_mask, ClassifyOptions, ClassReport, ParabolicPath};
use crate::signals::{cusp_partition, rough_background, CuspDomain};
use crate::wavelets::WaveletSpec;
use num_complex::Complex;
use serde::{Deserialize, Serialize};

/// Spectral Laplacian on the periodic grid.
pub fn laplacian(s: &GridSignal) -> GridSignal {
    let grid = s.grid;
    let mut spec = s.spectrum();
    for (m, v) in spec.iter_mut().enumerate() {
        let k = grid.frequency(m);
        *v *= -(k[0] * k[0] + k[1] * k[1]);
    }
    GridSignal::from_spectrum(grid, spec)
}

/// Solve Laplacian(eta) = f spectrally: eta_hat = -f_hat/|k|^2, zero mean.
/// The mean of f is removed first (required for solvability on the periodic
/// grid) and its magnitude reported.
pub fn poisson_solve(f: &GridSignal) -> (GridSignal, f64) {
    let grid = f.grid;
    let mut spec = f.spectrum();
    let removed = spec[0].norm() / grid.total_samples() as f64;
    spec[0] = Complex::default();
    for (m, v) in spec.iter_mut().enumerate().skip(1) {
        let k = grid.frequency(m);
        let k2 = k[0] * k[0] + k[1] * k[1];
        if k2 > 0.0 {
            *v = -*v / k2;
        } else {
            *v = Complex::default();
        }
    }
    (GridSignal::from_spectrum(grid, spec), removed)
}

/// Residual of the scale-transfer identity
/// W_g (Laplacian eta) = sigma a^{-2} W_{Laplacian g} eta for radial g, with
/// the sign sigma calibrated from the data.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TransferReport {
    /// Calibrated sign (+1 or -1) minimizing the residual.
    pub sigma: f64,
    pub max_rel_residual: f64,
    pub per_scale: Vec<f64>,
}

pub fn transfer_identity_residual(
    g: &WaveletSpec,
    eta: &GridSignal,
    scales: &ScaleGrid,
    opts: &EngineOptions,
) -> Result<TransferReport> {
    if !g.is_radial() {
        return Err(CoreError::NonRadialWavelet);
    }
    let lhs = forward(g, &laplacian(eta), scales, opts)?;
    let h = g.laplacian_of();
    let rhs = forward(&h, eta, scales, opts)?;

    let evaluate = |sigma: f64| -> (f64, Vec<f64>) {
        let mut per_scale = Vec::with_capacity(scales.count);
        let mut worst = 0.0f64;
        for j in 0..scales.count {
            let a2 = scales.scale(j).powi(-2);
            let l = lhs.slice(j);
            let r = rhs.slice(j);
            let mut num = 0.0f64;
            let mut den = 0.0f64;
            for (lv, rv) in l.iter().zip(r) {
                num = num.max((lv - rv * (sigma * a2)).norm());
                den = den.max(lv.norm());
            }
            let rel = if den > 0.0 { num / den } else { 0.0 };
            per_scale.push(rel);
            worst = worst.max(rel);
        }
        (worst, per_scale)
    };

    let (plus, per_plus) = evaluate(1.0);
    let (minus, per_minus) = evaluate(-1.0);
    let (sigma, max_rel_residual, per_scale) = if plus <= minus {
        (1.0, plus, per_plus)
    } else {
        (-1.0, minus, per_minus)
    };
    Ok(TransferReport {
        sigma,
        max_rel_residual,
        per_scale,
    })
}

/// Configuration of the regularity-gain experiment.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GainConfig {
    pub cusp: CuspDomain,
    pub gamma: f64,
    pub source_alpha: f64,
    pub seed: u64,
    pub lambda_lo: f64,
    pub lambda_hi: f64,
    pub epsilon: f64,
}

/// Outcome of the elliptic regularity-gain experiment.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EllipticReport {
    pub alpha_f: DecayFit,
    pub alpha_eta: DecayFit,
    pub gain: f64,
    pub transfer: TransferReport,
    /// Whether the analysis tube is well separated from the influence region
    /// of the cusp exterior (the hypothesis pattern of the general theorem).
    pub tube_separated_from_exterior_influence: bool,
    pub mean_removed: f64,
    pub source_class: ClassReport,
    pub solution_class: ClassReport,
}

/// Build a source of directional type (xi, gamma, alpha) supported in the
/// cusp, solve the Poisson equation, and classify both along Xi(xi, gamma).
pub fn regularity_gain_experiment(
    grid: GridMeta,
    scales: &ScaleGrid,
    g: &WaveletSpec,
    config: &GainConfig,
    opts: &EngineOptions,
) -> Result<EllipticReport> {
    if !(config.gamma > config.cusp.degree) {
        return Err(CoreError::HypothesisViolated(format!(
            "need gamma > cusp degree, got gamma = {} <= delta = {}",
            config.gamma, config.cusp.degree
        )));
    }
    if grid.dimension != 2 {
        return Err(CoreError::UnsupportedDimension(grid.dimension));
    }

    // source: rough texture of exponent alpha confined to the cusp
    let rough = rough_background(grid, config.source_alpha, config.seed, None, None)?;
    let phi = cusp_partition(&config.cusp, 3.0 * grid.spacing());
    let mut f = GridSignal::zeros(grid);
    for i in 0..grid.total_samples() {
        let w = phi(grid.position(i));
        f.values[i] = rough.values[i] * w;
    }
    let mean_removed = f.subtract_mean().norm();

    let (eta, _) = poisson_solve(&f);

    let path = ParabolicPath::new(
        config.cusp.axis,
        config.gamma,
        config.lambda_lo,
        config.lambda_hi,
        96,
    )?
    .anchored(config.cusp.apex);
    let field_f = forward(g, &f, scales, opts)?;
    let field_eta = forward(g, &eta, scales, opts)?;

    let classify_opts = ClassifyOptions {
        epsilon: config.epsilon,
        fit: FitOptions::for_field_max(field_f.max_abs()),
        ..Default::default()
    };
    let source_class = classify_type(&field_f, &path, &[config.source_alpha], &classify_opts)?;
    let classify_opts_eta = ClassifyOptions {
        epsilon: config.epsilon,
        fit: FitOptions::for_field_max(field_eta.max_abs()),
        ..Default::default()
    };
    let solution_class = classify_type(&field_eta, &path, &[config.source_alpha + 2.0], &classify_opts_eta)?;

    // transfer identity residual on the solution
    let transfer = transfer_identity_residual(g, &eta, scales, opts)?;

    // separation diagnostic: tube vs influence region of the cusp exterior
    let lattice = SampleLattice::new(grid, *scales);
    let tube = tube_mask(&path, config.epsilon, &lattice);
    let exterior: Vec<bool> = (0..grid.total_samples())
        .map(|i| !config.cusp.contains(grid.position(i)))
        .collect();
    let exterior_influence = influence_region(grid, &exterior)?;
    let sep = well_separated(
        &RegionMask::new(crate::geometry::RegionExpr::Raster(tube)),
        &exterior_influence,
        config.epsilon,
        &lattice,
    );

    let gain = solution_class.alpha_hat.slope - source_class.alpha_hat.slope;
    Ok(EllipticReport {
        alpha_f: source_class.alpha_hat.clone(),
        alpha_eta: solution_class.alpha_hat.clone(),
        gain,
        transfer,
        tube_separated_from_exterior_influence: sep.separated,
        mean_removed,
        source_class,
        solution_class,
    })
}

/// Decay slope of |W rho| over a tube well separated from the influence
/// region of the support of rho, fitted against Delta((b, a)).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SupportLocalizationReport {
    /// Positive decay order: |W| shrinks like Delta^{-order} on the tube.
    pub decay_order: f64,
    pub residual_rms: f64,
    pub samples_used: usize,
    pub vacuous: bool,
}

pub fn support_localization_check(
    rho: &GridSignal,
    tube_path: &ParabolicPath,
    epsilon: f64,
    g: &WaveletSpec,
    scales: &ScaleGrid,
    opts: &EngineOptions,
) -> Result<SupportLocalizationReport> {
    let grid = rho.grid;
    let support: Vec<bool> = rho.values.iter().map(|v| v.norm() > 0.0).collect();
    if !support.iter().any(|&b| b) {
        // zero signal: field vanishes, nothing to fit
        return Ok(SupportLocalizationReport {
            decay_order: f64::INFINITY,
            residual_rms: 0.0,
            samples_used: 0,
            vacuous: true,
        });
    }
    let lattice = SampleLattice::new(grid, *scales);
    let tube = tube_mask(tube_path, epsilon, &lattice);
    let influence = influence_region(grid, &support)?;
    let sep = well_separated(
        &RegionMask::new(crate::geometry::RegionExpr::Raster(tube.clone())),
        &influence,
        epsilon,
        &lattice,
    );
    if !sep.separated {
        return Err(CoreError::SeparationPrecondition(
            "tube is not well separated from the influence region of the support".into(),
        ));
    }
    let field = forward(g, rho, scales, opts)?;
    let samples = masked_delta_samples(&field, &tube);
    let floor = 10.0 * field.max_abs() * 1e-13;
    let kept: Vec<(f64, f64)> = samples
        .into_iter()
        .filter(|&(_, w)| w > floor)
        .collect();
    if kept.len() < 8 {
        // everything already under the noise floor: maximal decay
        return Ok(SupportLocalizationReport {
            decay_order: f64::INFINITY,
            residual_rms: 0.0,
            samples_used: kept.len(),
            vacuous: true,
        });
    }
    let xs: Vec<f64> = kept.iter().map(|&(d, _)| d.ln()).collect();
    let ys: Vec<f64> = kept.iter().map(|&(_, w)| w.ln()).collect();
    let (slope, _, rms) = ols(&xs, &ys);
    Ok(SupportLocalizationReport {
        decay_order: -slope,
        residual_rms: rms,
        samples_used: kept.len(),
        vacuous: false,
    })
}

/// Decay fit of the per-scale sup of |W| for a field, over scales where the
/// sup clears the field's own noise floor. Shared by the commutator
/// smoothing checks.
pub fn sup_decay_fit(field: &HalfSpaceField, window: Option<(f64, f64)>) -> Result<DecayFit> {
    let sups = field.sup_abs_per_scale();
    let mut samples: Vec<(f64, f64)> = (0..field.scales.count)
        .map(|j| (field.scales.scale(j), sups[j]))
        .collect();
    if let Some((lo, hi)) = window {
        samples.retain(|&(a, _)| a >= lo && a <= hi);
    }
    fit_decay(&samples, &FitOptions::for_field_max(field.max_abs()))
}
