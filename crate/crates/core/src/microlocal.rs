//! Parabolic paths, decay-exponent estimation along them, Hölder-scale
//! seminorms and the directional microlocal classification.

use crate::engine::HalfSpaceField;
use crate::error::{CoreError, Result};
use crate::fitting::{fit_decay, quantile_envelope_fit, DecayFit, FitOptions};
use crate::geometry::{
    delta, well_separated_points, HalfSpacePoint, RasterMask, RegionMask, SampleLattice,
};
use serde::{Deserialize, Serialize};

pub use crate::geometry::ParabolicPath;

/// One interpolated sample of |W| along a parabolic path.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct PathSample {
    pub lambda: f64,
    pub a: f64,
    pub abs_w: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PathSamples {
    pub samples: Vec<PathSample>,
    /// True when part of the path left the field's scale coverage and was
    /// dropped.
    pub clipped: bool,
}

/// Interpolate |W| at the path points (lambda xi, lambda^gamma); points whose
/// scale leaves the grid are clipped and reported.
pub fn sample_along_path(field: &HalfSpaceField, path: &ParabolicPath) -> Result<PathSamples> {
    let mut samples = Vec::with_capacity(path.samples);
    let mut clipped = false;
    for lambda in path.lambdas() {
        let p = path.point(lambda);
        match field.abs_interp(p.b, p.a) {
            Some(abs_w) => samples.push(PathSample {
                lambda,
                a: p.a,
                abs_w,
            }),
            None => clipped = true,
        }
    }
    if samples.is_empty() {
        return Err(CoreError::PathOutsideGrid);
    }
    samples.sort_by(|x, y| x.lambda.total_cmp(&y.lambda));
    Ok(PathSamples { samples, clipped })
}

/// Decay fit of path samples: slope of log|W| per log a.
pub fn fit_path_decay(samples: &PathSamples, opts: &FitOptions) -> Result<DecayFit> {
    let pairs: Vec<(f64, f64)> = samples.samples.iter().map(|s| (s.a, s.abs_w)).collect();
    fit_decay(&pairs, opts)
}

/// sup over the mask of a^{-alpha} |W|.
pub fn holder_seminorm(field: &HalfSpaceField, mask: &RasterMask, alpha: f64) -> Result<f64> {
    if mask.grid != field.grid || mask.scales != field.scales {
        return Err(CoreError::GridMismatch);
    }
    let per = field.grid.total_samples();
    let mut sup = f64::NEG_INFINITY;
    let mut any = false;
    for j in 0..field.scales.count {
        let aw = field.scales.scale(j).powf(-alpha);
        let slice = field.slice(j);
        for (i, v) in slice.iter().enumerate() {
            if mask.bits[j * per + i] {
                any = true;
                let val = v.norm() * aw;
                if val > sup {
                    sup = val;
                }
            }
        }
    }
    if !any {
        return Err(CoreError::EmptyMask);
    }
    Ok(sup)
}

#[derive(Debug, Clone, Copy)]
pub struct ClassifyOptions {
    /// Width exponent of the tube around the path.
    pub epsilon: f64,
    /// Slopes above this are reported as the cutoff (a lower bound standing
    /// in for rapid decay).
    pub alpha_cutoff: f64,
    /// Minimum per-scale tube population to use a scale in the fit.
    pub min_tube_points: usize,
    /// Stride over lattice points when fitting the outside growth bound.
    pub outside_stride: usize,
    pub fit: FitOptions,
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        ClassifyOptions {
            epsilon: 0.25,
            alpha_cutoff: 6.0,
            min_tube_points: 1,
            outside_stride: 7,
            fit: FitOptions::default(),
        }
    }
}

/// Polynomial growth envelope |W| <= c [(1 + |b|)(a + 1/a)]^k fitted outside
/// the tube.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct GrowthBound {
    pub c: f64,
    pub k: f64,
}

/// Verdict of a directional classification.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClassReport {
    pub origin: [f64; 2],
    pub xi: [f64; 2],
    pub gamma: f64,
    pub epsilon: f64,
    /// Fitted Hölder exponent along the tube (slope of the per-scale sup).
    pub alpha_hat: DecayFit,
    /// Seminorm sup a^{-alpha} |W| over the tube, per requested alpha.
    pub alpha_grid: Vec<f64>,
    pub tube_seminorms: Vec<f64>,
    pub growth: GrowthBound,
    /// Number of tube points per scale, for diagnostics.
    pub tube_population: Vec<usize>,
}

/// Rasterized tube Gamma_epsilon around the path, with the path's own
/// snapped lattice cells included so thin tubes never lose their spine.
pub fn tube_mask(
    path: &ParabolicPath,
    epsilon: f64,
    lattice: &SampleLattice,
) -> RasterMask {
    let mut raster = RegionMask::gamma_tube(path.clone(), epsilon).rasterize(lattice);
    let n = lattice.grid.samples_per_axis;
    let dx = lattice.grid.spacing();
    let per = lattice.grid.total_samples();
    for q in path.points() {
        let j = lattice.scales.log_index(q.a).round();
        if j < 0.0 || j >= lattice.scales.count as f64 {
            continue;
        }
        let wrap = |x: f64| (x / dx).round().rem_euclid(n as f64) as usize;
        let flat = match lattice.grid.dimension {
            1 => wrap(q.b[0]),
            _ => wrap(q.b[0]) * n + wrap(q.b[1]),
        };
        raster.bits[j as usize * per + flat] = true;
    }
    raster
}

/// Classify the directional type of a field along Xi(xi, gamma): fit the
/// decay of the per-scale sup of |W| over the Gamma_epsilon tube, and a
/// polynomial growth envelope outside it.
pub fn classify_type(
    field: &HalfSpaceField,
    path: &ParabolicPath,
    alpha_grid: &[f64],
    opts: &ClassifyOptions,
) -> Result<ClassReport> {
    let lattice = field.lattice();
    let tube = tube_mask(path, opts.epsilon, &lattice);
    let per = field.grid.total_samples();

    // per-scale sup over the tube, fitted only inside the path's own scale
    // range (the tube thins into isolated balls beyond it)
    let a_path_lo = path.point(path.lambda_lo).a;
    let a_path_hi = path.point(path.lambda_hi).a;
    let mut sup_samples = Vec::new();
    let mut population = vec![0usize; field.scales.count];
    for j in 0..field.scales.count {
        let slice = field.slice(j);
        let mut sup = 0.0f64;
        let mut count = 0usize;
        for (i, v) in slice.iter().enumerate() {
            if tube.bits[j * per + i] {
                count += 1;
                sup = sup.max(v.norm());
            }
        }
        population[j] = count;
        let a = field.scales.scale(j);
        if count >= opts.min_tube_points && a >= a_path_lo * (1.0 - 1e-9) && a <= a_path_hi * (1.0 + 1e-9) {
            sup_samples.push((a, sup));
        }
    }
    if sup_samples.len() < opts.fit.min_samples {
        return Err(CoreError::TubeUnresolvable);
    }
    let span = |pairs: &[(f64, f64)]| -> f64 {
        let lo = pairs.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
        let hi = pairs.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
        (hi / lo).log10()
    };
    if span(&sup_samples) < opts.fit.min_decades {
        return Err(CoreError::TubeUnresolvable);
    }
    let above_floor: Vec<(f64, f64)> = sup_samples
        .iter()
        .filter(|&&(_, w)| w > 10.0 * opts.fit.noise_floor)
        .copied()
        .collect();

    let mut alpha_hat = if above_floor.len() < opts.fit.min_samples
        || span(&above_floor) < opts.fit.min_decades
    {
        // the tube spans a full window but the values sit at the noise
        // floor: decay is at least the cutoff, reported as a lower bound
        DecayFit {
            slope: opts.alpha_cutoff,
            intercept: f64::NEG_INFINITY,
            residual_rms: 0.0,
            samples_used: above_floor.len(),
            window_decades: 0.0,
            success: true,
            clamped_at_cutoff: true,
        }
    } else {
        fit_decay(&sup_samples, &opts.fit)?
    };
    if alpha_hat.slope > opts.alpha_cutoff {
        alpha_hat.slope = opts.alpha_cutoff;
        alpha_hat.clamped_at_cutoff = true;
    }

    // seminorms over the tube for the requested alphas
    let tube_seminorms = alpha_grid
        .iter()
        .map(|&al| holder_seminorm(field, &tube, al))
        .collect::<Result<Vec<_>>>()?;

    // growth envelope outside the tube
    let mut outside = Vec::new();
    let floor = opts.fit.noise_floor.max(field.max_abs() * 1e-300);
    for j in 0..field.scales.count {
        let a = field.scales.scale(j);
        let slice = field.slice(j);
        for i in (0..per).step_by(opts.outside_stride) {
            if !tube.bits[j * per + i] {
                let b = field.grid.position(i);
                let growth = ((1.0 + (b[0] * b[0] + b[1] * b[1]).sqrt()) * (a + 1.0 / a)).ln();
                let w = slice[i].norm();
                if w > floor {
                    outside.push((growth, w.ln()));
                }
            }
        }
    }
    let growth = match quantile_envelope_fit(&outside, 0.95, 12) {
        Ok((k, c_log)) => GrowthBound {
            c: c_log.exp(),
            k,
        },
        Err(_) => GrowthBound { c: 0.0, k: 0.0 },
    };

    Ok(ClassReport {
        origin: path.origin,
        xi: path.xi,
        gamma: path.gamma,
        epsilon: opts.epsilon,
        alpha_hat,
        alpha_grid: alpha_grid.to_vec(),
        tube_seminorms,
        growth,
        tube_population: population,
    })
}

#[derive(Debug, Clone, Copy)]
pub struct MembershipOptions {
    /// Seminorms above this ceiling mean the bound is not finite at the
    /// sampled resolution.
    pub seminorm_ceiling: f64,
    /// Separation exponent used in the nested-family precondition.
    pub separation_epsilon: f64,
    pub check_separation: bool,
}

impl Default for MembershipOptions {
    fn default() -> Self {
        MembershipOptions {
            seminorm_ceiling: 100.0,
            separation_epsilon: 0.1,
            check_separation: true,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MembershipReport {
    pub alpha: f64,
    pub seminorms: Vec<f64>,
    pub growth: GrowthBound,
    pub member: bool,
}

/// Microlocal class membership against a nested family of masks: every mask
/// seminorm must stay below the ceiling and the global growth envelope must
/// be finite. The family must be increasing, and each mask must be well
/// separated from the complement of the next (the separation that lets the
/// verdict transfer between wavelets).
pub fn class_membership_inner(
    field: &HalfSpaceField,
    masks: &[RegionMask],
    alpha: f64,
    opts: &MembershipOptions,
) -> Result<MembershipReport> {
    if masks.is_empty() {
        return Err(CoreError::EmptyMask);
    }
    let lattice = field.lattice();
    let rasters: Vec<RasterMask> = masks.iter().map(|m| m.rasterize(&lattice)).collect();
    for k in 0..rasters.len() - 1 {
        if !rasters[k].is_subset_of(&rasters[k + 1]) {
            return Err(CoreError::NestingViolated { index: k });
        }
        if opts.check_separation {
            let inner = rasters[k].sample_points();
            let outer_c = rasters[k + 1].complement().sample_points();
            let report = well_separated_points(&outer_c, &inner, opts.separation_epsilon);
            if !report.separated {
                return Err(CoreError::SeparationPrecondition(format!(
                    "mask {} is not well separated from the complement of mask {}",
                    k,
                    k + 1
                )));
            }
        }
    }
    let seminorms = rasters
        .iter()
        .map(|r| holder_seminorm(field, r, alpha))
        .collect::<Result<Vec<_>>>()?;
    // growth envelope over the whole lattice
    let mut points = Vec::new();
    let per = field.grid.total_samples();
    let floor = field.max_abs() * 1e-300;
    for j in 0..field.scales.count {
        let a = field.scales.scale(j);
        let slice = field.slice(j);
        for i in (0..per).step_by(5) {
            let b = field.grid.position(i);
            let g = ((1.0 + (b[0] * b[0] + b[1] * b[1]).sqrt()) * (a + 1.0 / a)).ln();
            let w = slice[i].norm();
            if w > floor {
                points.push((g, w.ln()));
            }
        }
    }
    let growth = match quantile_envelope_fit(&points, 0.95, 12) {
        Ok((k, c_log)) => GrowthBound { c: c_log.exp(), k },
        Err(_) => GrowthBound { c: 0.0, k: 0.0 },
    };
    let member = seminorms
        .iter()
        .all(|&s| s.is_finite() && s <= opts.seminorm_ceiling)
        && growth.k.is_finite();
    Ok(MembershipReport {
        alpha,
        seminorms,
        growth,
        member,
    })
}

/// Points of the lattice, with Delta values, restricted to a mask; used by
/// the support-localization slope fit.
pub fn masked_delta_samples(field: &HalfSpaceField, mask: &RasterMask) -> Vec<(f64, f64)> {
    let lattice = field.lattice();
    let per = field.grid.total_samples();
    let mut out = Vec::new();
    for j in 0..field.scales.count {
        let slice = field.slice(j);
        for (i, v) in slice.iter().enumerate() {
            let flat = j * per + i;
            if mask.bits[flat] {
                let p: HalfSpacePoint = lattice.point(flat);
                out.push((delta(p), v.norm()));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{forward, EngineOptions};
    use crate::grid::{GridMeta, GridSignal, ScaleGrid};
    use crate::signals;
    use crate::wavelets::WaveletSpec;
    use num_complex::Complex;

    fn synthetic_power_field(exponent: f64) -> HalfSpaceField {
        let grid = GridMeta::new(1, 64, 1.0).unwrap();
        let scales = ScaleGrid::new(1e-3, 0.4, 40).unwrap();
        let g = WaveletSpec::log_normal(1).unwrap();
        HalfSpaceField::from_fn(grid, scales, g, |_, a| Complex::new(a.powf(exponent), 0.0))
    }

    #[test]
    fn path_points_satisfy_parabolic_relation() {
        let path = ParabolicPath::new([1.0, 0.0], 2.0, 0.01, 0.5, 32).unwrap();
        for lambda in path.lambdas() {
            let p = path.point(lambda);
            assert!((p.a - lambda.powi(2)).abs() < 1e-15);
            // a = |b|^gamma exactly on the path
            assert!((p.a - p.b_norm().powf(2.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn sampling_constant_field_returns_constant() {
        let field = synthetic_power_field(0.0);
        let path = ParabolicPath::new([1.0, 0.0], 2.0, 0.04, 0.5, 24)
            .unwrap()
            .anchored([0.3, 0.0]);
        let s = sample_along_path(&field, &path).unwrap();
        for sm in &s.samples {
            assert!((sm.abs_w - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn sampling_power_field_matches_lambda_power() {
        let field = synthetic_power_field(0.5);
        let gamma = 2.0;
        let path = ParabolicPath::new([1.0, 0.0], gamma, 0.04, 0.5, 24)
            .unwrap()
            .anchored([0.3, 0.0]);
        let s = sample_along_path(&field, &path).unwrap();
        for sm in &s.samples {
            let expect = sm.lambda.powf(gamma * 0.5);
            assert!((sm.abs_w - expect).abs() < 1e-3 * expect);
        }
    }

    #[test]
    fn fit_decay_on_synthetic_fields() {
        let field = synthetic_power_field(0.5);
        let path = ParabolicPath::new([1.0, 0.0], 2.0, 0.04, 0.5, 48)
            .unwrap()
            .anchored([0.3, 0.0]);
        let s = sample_along_path(&field, &path).unwrap();
        let fit = fit_path_decay(&s, &FitOptions::default()).unwrap();
        assert!((fit.slope - 0.5).abs() < 5e-3, "slope {}", fit.slope);
    }

    #[test]
    fn holder_estimate_on_generated_cusp() {
        // fitted decay exponent at the singular point recovers alpha
        let grid = GridMeta::new(1, 8192, 1.0).unwrap();
        let alpha = 0.3;
        let s = signals::holder_cusp(grid, alpha, [0.5, 0.0], 0.42).unwrap();
        let g = WaveletSpec::log_normal(1).unwrap();
        let scales = ScaleGrid::new(1.5e-3, 4.8e-2, 48).unwrap();
        let field = forward(&g, &s, &scales, &EngineOptions::default()).unwrap();
        let idx = (0.5 / grid.spacing()).round() as usize;
        let samples: Vec<(f64, f64)> = (0..scales.count)
            .map(|j| (scales.scale(j), field.slice(j)[idx].norm()))
            .collect();
        let fit = fit_decay(&samples, &FitOptions::for_field_max(field.max_abs())).unwrap();
        assert!(
            (fit.slope - alpha).abs() < 0.05,
            "fitted {} vs {}",
            fit.slope,
            alpha
        );
    }

    #[test]
    fn seminorm_examples() {
        let field = synthetic_power_field(0.7);
        let lat = field.lattice();
        let all = RegionMask::all().rasterize(&lat);
        // field = a^alpha exactly: seminorm at alpha is 1
        let s = holder_seminorm(&field, &all, 0.7).unwrap();
        assert!((s - 1.0).abs() < 1e-12);
        // alpha = 0: sup |W|
        let s0 = holder_seminorm(&field, &all, 0.0).unwrap();
        assert!((s0 - field.max_abs()).abs() < 1e-12);
        // monotone under mask inclusion
        let half = RegionMask::parabolic_strip([0.5, 0.0], 1.0, true, 0.5).rasterize(&lat);
        let s_half = holder_seminorm(&field, &half, 0.7).unwrap();
        assert!(s_half <= s + 1e-15);
        // empty mask errors
        let empty = RegionMask::empty().rasterize(&lat);
        assert!(matches!(
            holder_seminorm(&field, &empty, 0.7),
            Err(CoreError::EmptyMask)
        ));
    }

    #[test]
    fn membership_on_exact_power_field() {
        let field = synthetic_power_field(0.5);
        let path = ParabolicPath::new([1.0, 0.0], 2.0, 0.05, 0.5, 24)
            .unwrap()
            .anchored([0.5, 0.0]);
        // one-parameter nested family Gamma_{1/k}
        let masks: Vec<RegionMask> = [4.0, 2.0, 1.0]
            .iter()
            .map(|&k| RegionMask::gamma_tube(path.clone(), 1.0 / k))
            .collect();
        let opts = MembershipOptions {
            seminorm_ceiling: 20.0,
            ..Default::default()
        };
        let member = class_membership_inner(&field, &masks, 0.5, &opts).unwrap();
        assert!(member.member, "seminorms {:?}", member.seminorms);
        // at alpha + 0.5 the seminorm blows up like a_min^{-0.5}
        let worse = class_membership_inner(&field, &masks, 1.0, &opts).unwrap();
        assert!(!worse.member, "seminorms {:?}", worse.seminorms);
    }

    #[test]
    fn membership_rejects_broken_nesting() {
        let field = synthetic_power_field(0.5);
        let lat = field.lattice();
        let a = RegionMask::parabolic_strip([0.5, 0.0], 1.0, true, 0.3).rasterize(&lat);
        let b = RegionMask::parabolic_strip([0.5, 0.0], 3.0, true, 0.3).rasterize(&lat);
        // b strictly contains a, so passing [b, a] breaks the nesting
        let masks = vec![
            RegionMask::new(crate::geometry::RegionExpr::Raster(b)),
            RegionMask::new(crate::geometry::RegionExpr::Raster(a)),
        ];
        assert!(matches!(
            class_membership_inner(&field, &masks, 0.5, &MembershipOptions::default()),
            Err(CoreError::NestingViolated { index: 0 })
        ));
    }
}
